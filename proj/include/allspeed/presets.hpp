#pragma once

// Initial data of the three benchmark problems.

#include <allspeed/state.hpp>

#include <cmath>
#include <numbers>

namespace allspeed {

/// Riemann-type data on [0, 1] with p = rho^2: density and momentum carry
/// O(eps^2) jumps around a unit background.
inline FluidState1D example1_initial(std::size_t m, double epsilon) {
  const Grid1D g(0.0, 1.0, m);
  const double e2 = epsilon * epsilon;
  Field rho(m), q(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double x = g.center(j);
    if (x <= 0.2 || x > 0.8) {
      rho[j] = 1.0;
      q[j] = 1.0 - 0.5 * e2;
    } else if (x <= 0.3) {
      rho[j] = 1.0 + e2;
      q[j] = 1.0;
    } else if (x <= 0.7) {
      rho[j] = 1.0;
      q[j] = 1.0 + 0.5 * e2;
    } else {
      rho[j] = 1.0 - e2;
      q[j] = 1.0;
    }
  }
  return {g, std::move(rho), std::move(q)};
}

inline EquationOfState example1_eos() { return {1.0, 2.0}; }

/// Two colliding acoustic pulses on [-1, 1] with p = rho^1.4.
inline FluidState1D example2_initial(std::size_t m, double epsilon) {
  const Grid1D g(-1.0, 1.0, m);
  const double s = std::sqrt(1.4);
  Field rho(m), q(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double x = g.center(j);
    const double bump = 1.0 - std::cos(2.0 * std::numbers::pi * x);
    rho[j] = 0.955 + 0.5 * epsilon * bump;
    const double sign = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    q[j] = rho[j] * (-sign * s * bump);
  }
  return {g, std::move(rho), std::move(q)};
}

inline EquationOfState example2_eos() { return {1.0, 1.4}; }

/// Smooth periodic shear flow on the unit square with p = rho^2.
inline FluidState2D example3_initial(std::size_t m1, std::size_t m2, double epsilon) {
  const Grid2D g(m1, m2);
  const double e2 = epsilon * epsilon;
  const double tp = 2.0 * std::numbers::pi;
  Field rho(g.size()), q1(g.size()), q2(g.size());
  for (std::size_t i = 0; i < m1; ++i) {
    for (std::size_t j = 0; j < m2; ++j) {
      const double x = g.x_center(i), y = g.y_center(j);
      const std::size_t k = i * m2 + j;
      const double sp = std::sin(tp * (x + y));
      rho[k] = 1.0 + e2 * sp * sp;
      q1[k] = std::sin(tp * (x - y)) + e2 * sp;
      q2[k] = std::sin(tp * (x - y)) + e2 * std::cos(tp * (x + y));
    }
  }
  return {g, std::move(rho), std::move(q1), std::move(q2)};
}

inline EquationOfState example3_eos() { return {1.0, 2.0}; }

} // namespace allspeed
