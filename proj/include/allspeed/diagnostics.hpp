#pragma once

// Error norms, total variation, convergence orders, low-Mach fluctuation
// diagnostics and the alpha / dt admissibility advisor.

#include <allspeed/errors.hpp>
#include <allspeed/state.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace allspeed {

/// How the relative L2 error is normalised.
///  Literal: (1/M) sqrt(sum |U_j - u(x_j)|^2) over (1/M_ref) sqrt(sum u_k^2),
///           the printed grid-mixing form used for the error tables.
///  Rms:     coarse-grid RMS of the difference over reference-grid RMS.
/// They differ by the factor sqrt(M_ref / M).
enum class ErrorNorm { Literal, Rms };

struct ErrorReport {
  double e_rho = 0.0;
  double e_q = 0.0;
  std::optional<double> order_rho;
  std::optional<double> order_q;
};

namespace detail {

/// Fine cell whose centre is nearest the centre of coarse cell j.
inline std::size_t nearest_fine(const Grid1D& coarse, const Grid1D& fine, std::size_t j) {
  const double x = coarse.center(j);
  const double k = std::floor((x - fine.a()) / fine.dx());
  return std::min(static_cast<std::size_t>(std::max(k, 0.0)), fine.m() - 1);
}

inline double field_error(const Field& u, const Field& ref, const Grid1D& g, const Grid1D& gref,
                          ErrorNorm norm) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double d = u[j] - ref[nearest_fine(g, gref, j)];
    num += d * d;
  }
  for (double v : ref) den += v * v;
  const double m = static_cast<double>(u.size()), mr = static_cast<double>(ref.size());
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  if (norm == ErrorNorm::Rms) return std::sqrt(num / m) / std::sqrt(den / mr);
  return (std::sqrt(num) / m) / (std::sqrt(den) / mr);
}

} // namespace detail

/// Relative L2 error of `numeric` against a reference on a grid refined by an
/// integer factor over the same interval.
inline ErrorReport relative_l2_error(const FluidState1D& numeric, const FluidState1D& reference,
                                     ErrorNorm norm = ErrorNorm::Literal) {
  const Grid1D& g = numeric.grid();
  const Grid1D& gr = reference.grid();
  if (g.a() != gr.a() || g.b() != gr.b() || gr.m() % g.m() != 0)
    throw IncompatibleGridsError("reference grid must refine the numeric grid by an integer factor");
  return {detail::field_error(numeric.rho(), reference.rho(), g, gr, norm),
          detail::field_error(numeric.q(), reference.q(), g, gr, norm), std::nullopt, std::nullopt};
}

/// sum_j |u_{j+1} - u_j| with periodic wrap.
inline double total_variation(std::span<const double> field) {
  const std::size_t m = field.size();
  double tv = 0.0;
  for (std::size_t j = 0; j < m; ++j) tv += std::abs(field[(j + 1) % m] - field[j]);
  return tv;
}

struct ConvergenceStep {
  double ratio; ///< e_k / e_{k+1}
  double order; ///< log2(ratio)
};

/// Ratios and log2 orders between consecutive entries of (dx, e). Successive
/// dx must halve (to 1e-9 relative) or repeat; a repeated dx marks a dt-only
/// refinement and is reported like any other pair.
inline std::vector<ConvergenceStep> convergence_order(const std::vector<std::pair<double, double>>& errors) {
  std::vector<ConvergenceStep> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    const double a = errors[k].first, b = errors[k + 1].first;
    const bool halves = std::abs(a - 2.0 * b) <= 1e-9 * a;
    const bool repeats = std::abs(a - b) <= 1e-9 * a;
    if (!halves && !repeats) throw InvalidStateError("convergence_order: dx must halve between entries");
    const double ratio = errors[k].second / errors[k + 1].second;
    out.push_back({ratio, std::log2(ratio)});
  }
  return out;
}

struct AlphaInterval {
  double sqrt_alpha_lo = 0.0;
  double sqrt_alpha_hi = 0.0;
  bool feasible = false;
};

/// Admissible range of sqrt(alpha): enough numerical diffusion in the density
/// equation (lower bound) under the explicit CFL restriction (upper bound),
/// with alpha < 1/eps^2 so that an implicit pressure part remains.
inline AlphaInterval alpha_admissible(double dx, double dt, double epsilon, double sigma,
                                      double umax) {
  if (!(dx > 0.0 && dt > 0.0 && epsilon > 0.0 && umax >= 0.0) || !(sigma > 0.0 && sigma < 1.0))
    throw InvalidStateError("alpha_admissible: invalid arguments");
  AlphaInterval r;
  const double inv_eps = 1.0 / epsilon;
  r.sqrt_alpha_lo = dx / (2.0 * dt) - inv_eps;
  r.sqrt_alpha_hi = sigma * dx / dt - umax;
  const double lo = std::max(r.sqrt_alpha_lo, 0.0);
  r.feasible = lo <= r.sqrt_alpha_hi && lo <= inv_eps && r.sqrt_alpha_lo < inv_eps;
  return r;
}

struct Fluctuation {
  double mean_rho = 0.0;
  double fluct_inf = 0.0; ///< max |rho - mean| / eps^2
};

inline Fluctuation ap_fluctuation(std::span<const double> rho, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidStateError("ap_fluctuation: epsilon must be positive");
  double mean = 0.0;
  for (double r : rho) mean += r;
  mean /= static_cast<double>(rho.size());
  double dev = 0.0;
  for (double r : rho) dev = std::max(dev, std::abs(r - mean));
  return {mean, dev / (epsilon * epsilon)};
}
inline Fluctuation ap_fluctuation(const FluidState1D& s, double epsilon) {
  return ap_fluctuation(s.rho(), epsilon);
}
inline Fluctuation ap_fluctuation(const FluidState2D& s, double epsilon) {
  return ap_fluctuation(s.rho(), epsilon);
}

/// Centred D^x q1 + D^y q2 per cell.
inline Field discrete_divergence_2d(const FluidState2D& s) {
  const Grid2D& g = s.grid();
  const auto m1 = static_cast<std::ptrdiff_t>(g.m1()), m2 = static_cast<std::ptrdiff_t>(g.m2());
  Field d(g.size());
  for (std::ptrdiff_t i = 0; i < m1; ++i)
    for (std::ptrdiff_t j = 0; j < m2; ++j)
      d[g.index(i, j)] = (s.q1()[g.index(i + 1, j)] - s.q1()[g.index(i - 1, j)]) / (2.0 * g.dx()) +
                         (s.q2()[g.index(i, j + 1)] - s.q2()[g.index(i, j - 1)]) / (2.0 * g.dy());
  return d;
}

/// Internal energy density e with e'' = p'/rho, scaled later by 1/eps^2.
inline double internal_energy(const EquationOfState& eos, double rho) {
  if (eos.gamma() == 1.0) return eos.lambda_coeff() * rho * std::log(rho);
  return eos.pressure(rho) / (eos.gamma() - 1.0);
}
inline double internal_energy_derivative(const EquationOfState& eos, double rho) {
  if (eos.gamma() == 1.0) return eos.lambda_coeff() * (std::log(rho) + 1.0);
  return eos.gamma() / (eos.gamma() - 1.0) * eos.pressure(rho) / rho;
}

/// Mean over cells of the relative entropy eta(U | U_bar), where
/// eta = |q|^2 / (2 rho) + e(rho) / eps^2 and U_bar is the spatial mean state.
/// Non-negative; conservative entropy-stable updates do not increase it.
inline double relative_entropy(const EquationOfState& eos, double epsilon, std::span<const double> rho,
                               std::span<const double> q1, std::span<const double> q2 = {}) {
  const std::size_t n = rho.size();
  const bool two = !q2.empty();
  double rb = 0.0, ab = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    rb += rho[k];
    ab += q1[k];
    if (two) bb += q2[k];
  }
  rb /= static_cast<double>(n);
  ab /= static_cast<double>(n);
  bb /= static_cast<double>(n);
  const double inv_e2 = 1.0 / (epsilon * epsilon);
  const double ua = ab / rb, ub = bb / rb;
  const double e_bar = internal_energy(eos, rb), de_bar = internal_energy_derivative(eos, rb);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = rho[k], a = q1[k], b = two ? q2[k] : 0.0;
    // Kinetic part: |q - rho u_bar|^2 / (2 rho).
    const double da = a - r * ua, db = b - r * ub;
    const double kin = (da * da + db * db) / (2.0 * r);
    const double pot = internal_energy(eos, r) - e_bar - de_bar * (r - rb);
    sum += kin + inv_e2 * pot;
  }
  return sum / static_cast<double>(n);
}

} // namespace allspeed
