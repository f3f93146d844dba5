#pragma once

// Per-step elliptic systems for the density update. All operators are of the
// form  rho - beta * (discrete diffusion of rho or of p(rho)) = rhs  on a
// periodic grid, with beta = (1 - alpha eps^2) dt^2 / eps^2.

#include <allspeed/errors.hpp>
#include <allspeed/periodic_tridiagonal.hpp>
#include <allspeed/state.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <cstdio>
#include <string>
#include <vector>

namespace allspeed {

/// beta multiplies the diffusion part; mobility holds the frozen p'(rho^n) per
/// cell for the linearised operators.
struct EllipticCoefficients {
  double beta = 0.0;
  Field mobility;
};

inline Field frozen_mobility(const EquationOfState& eos, std::span<const double> rho) {
  Field m(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j) m[j] = eos.pressure_derivative(rho[j]);
  return m;
}

namespace detail {
inline void check_coefficients(const EllipticCoefficients& c, std::size_t n) {
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta))
    throw InvalidStateError("elliptic coefficients: beta must be finite and >= 0");
  if (c.mobility.size() != n)
    throw InvalidStateError("elliptic coefficients: mobility size mismatch");
  for (double m : c.mobility)
    if (!(m > 0.0) || !std::isfinite(m))
      throw InvalidStateError("elliptic coefficients: mobility must be positive");
}

inline std::size_t at(std::size_t j, std::ptrdiff_t off, std::size_t m) {
  return wrap(static_cast<std::ptrdiff_t>(j) + off, m);
}

inline double max_abs(std::span<const double> v) {
  double r = 0.0;
  for (double x : v) r = std::max(r, std::abs(x));
  return r;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// The linear density operators have unit row sums, so A(x - k) = b - k for a
// constant k. Solving for the deviation from the mean of b keeps constant
// states exact and resolves small fluctuations to relative accuracy.
inline Field deviation(std::span<const double> b, double k) {
  Field d(b.begin(), b.end());
  for (auto& x : d) x -= k;
  return d;
}
inline void add_constant(Field& x, double k) {
  for (auto& v : x) v += k;
}

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}
} // namespace detail

// ---------------------------------------------------------------------------
// 1D forward operators

/// Three-point operator: rho_j - beta/dx^2 [ m_{j+1}(rho_{j+1}-rho_j) - m_j(rho_j-rho_{j-1}) ].
inline Field apply_elliptic_ld_1d(std::span<const double> rho, const EllipticCoefficients& c,
                                  double dx) {
  const std::size_t m = rho.size();
  const double b = c.beta / (dx * dx);
  Field out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = detail::at(j, 1, m), l = detail::at(j, -1, m);
    out[j] = rho[j] - b * (c.mobility[r] * (rho[r] - rho[j]) - c.mobility[j] * (rho[j] - rho[l]));
  }
  return out;
}

/// Stride-2 operator: rho_j - beta/(4dx^2) [ m_{j+1}(rho_{j+2}-rho_j) - m_{j-1}(rho_j-rho_{j-2}) ].
inline Field apply_elliptic_l_1d(std::span<const double> rho, const EllipticCoefficients& c,
                                 double dx) {
  const std::size_t m = rho.size();
  const double b = c.beta / (4.0 * dx * dx);
  Field out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r1 = detail::at(j, 1, m), l1 = detail::at(j, -1, m);
    const std::size_t r2 = detail::at(j, 2, m), l2 = detail::at(j, -2, m);
    out[j] = rho[j] - b * (c.mobility[r1] * (rho[r2] - rho[j]) -
                           c.mobility[l1] * (rho[j] - rho[l2]));
  }
  return out;
}

/// Nonlinear stride-2 operator: rho_j - beta/(4dx^2) (p_{j+2} - 2p_j + p_{j-2}).
inline Field apply_elliptic_nl_1d(std::span<const double> rho, double beta,
                                  const EquationOfState& eos, double dx) {
  const std::size_t m = rho.size();
  const double b = beta / (4.0 * dx * dx);
  Field p(m);
  for (std::size_t j = 0; j < m; ++j) p[j] = eos.pressure(rho[j]);
  Field out(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r2 = detail::at(j, 2, m), l2 = detail::at(j, -2, m);
    out[j] = rho[j] - b * (p[r2] - 2.0 * p[j] + p[l2]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// 1D solvers

struct LinearSolveInfo {
  Field solution;
  int iterations = 0;
};

/// Three-point (LD) solve; one periodic tridiagonal system.
inline LinearSolveInfo solve_elliptic_ld_1d(std::span<const double> dphi,
                                            const EllipticCoefficients& c, double dx,
                                            double tol = 1e-11) {
  const std::size_t m = dphi.size();
  detail::check_coefficients(c, m);
  const double b = c.beta / (dx * dx);
  const double k = detail::mean(dphi);
  PeriodicTridiagonalSystem sys{Field(m), Field(m), Field(m), detail::deviation(dphi, k)};
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = detail::at(j, 1, m);
    sys.super[j] = -b * c.mobility[r];
    sys.sub[j] = -b * c.mobility[j];
    sys.diag[j] = 1.0 + b * (c.mobility[r] + c.mobility[j]);
  }
  Field x = solve_periodic_tridiagonal(sys, tol);
  detail::add_constant(x, k);
  return {std::move(x), 1};
}

namespace detail {
// Even/odd decoupled solve of a stride-2 operator. `row` fills (sub, diag, super)
// for global cell j; sub couples to j-2 and super to j+2.
template <class RowFn>
LinearSolveInfo solve_stride2(std::span<const double> rhs, RowFn&& row, double tol) {
  const std::size_t m = rhs.size();
  if (m % 2 != 0)
    throw UnsupportedGridError("stride-2 elliptic stencil requires an even cell count, got " +
                               std::to_string(m));
  const std::size_t n = m / 2;
  Field x(m);
  for (std::size_t parity = 0; parity < 2; ++parity) {
    PeriodicTridiagonalSystem sys{Field(n), Field(n), Field(n), Field(n)};
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = parity + 2 * k;
      row(j, sys.sub[k], sys.diag[k], sys.super[k]);
      sys.rhs[k] = rhs[j];
    }
    const Field xs = solve_periodic_tridiagonal(sys, tol);
    for (std::size_t k = 0; k < n; ++k) x[parity + 2 * k] = xs[k];
  }
  return {std::move(x), 2};
}
} // namespace detail

/// Five-point stride-2 (L) solve; decouples into two periodic tridiagonal
/// systems on the even and odd cells.
inline LinearSolveInfo solve_elliptic_l_1d(std::span<const double> dphi,
                                           const EllipticCoefficients& c, double dx,
                                           double tol = 1e-11) {
  const std::size_t m = dphi.size();
  detail::check_coefficients(c, m);
  const double b = c.beta / (4.0 * dx * dx);
  const double k = detail::mean(dphi);
  auto r = detail::solve_stride2(
      detail::deviation(dphi, k),
      [&](std::size_t j, double& sub, double& diag, double& super) {
        const double mr = c.mobility[detail::at(j, 1, m)];
        const double ml = c.mobility[detail::at(j, -1, m)];
        super = -b * mr;
        sub = -b * ml;
        diag = 1.0 + b * (mr + ml);
      },
      tol);
  detail::add_constant(r.solution, k);
  return r;
}

struct NewtonResult {
  Field solution;
  int iterations = 0;
  double residual = 0.0; ///< max-norm of G at the returned iterate
};

/// Newton iteration for  G(rho) = rho - beta/(4dx^2) S2[p(rho)] - dphi = 0,
/// starting from rho_n. The Jacobian I - beta/(4dx^2) S2[p'(rho) .] is exact
/// and keeps the even/odd decoupling, so every iteration is two periodic
/// tridiagonal solves. Converged when |delta|_inf <= newton_tol or
/// |G|_inf <= newton_tol.
inline NewtonResult solve_elliptic_nl_1d(std::span<const double> rho_n,
                                         std::span<const double> dphi, double beta,
                                         const EquationOfState& eos, double dx,
                                         double newton_tol = 1e-12, int max_iter = 50,
                                         double linear_tol = 1e-11) {
  const std::size_t m = dphi.size();
  if (rho_n.size() != m) throw InvalidStateError("newton solve: size mismatch");
  if (!(beta >= 0.0)) throw InvalidStateError("newton solve: beta must be >= 0");
  if (m % 2 != 0)
    throw UnsupportedGridError("stride-2 elliptic stencil requires an even cell count, got " +
                               std::to_string(m));
  const double b = beta / (4.0 * dx * dx);

  Field rho(rho_n.begin(), rho_n.end());
  auto residual = [&](const Field& r) {
    Field g = apply_elliptic_nl_1d(r, beta, eos, dx);
    for (std::size_t j = 0; j < m; ++j) g[j] -= dphi[j];
    return g;
  };

  Field g = residual(rho);
  for (int it = 1; it <= max_iter; ++it) {
    const Field slope = frozen_mobility(eos, rho);
    auto row = [&](std::size_t j, double& sub, double& diag, double& super) {
      super = -b * slope[detail::at(j, 2, m)];
      sub = -b * slope[detail::at(j, -2, m)];
      diag = 1.0 + 2.0 * b * slope[j];
    };
    const Field delta = detail::solve_stride2(g, row, linear_tol).solution;
    double dnorm = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      rho[j] -= delta[j];
      dnorm = std::max(dnorm, std::abs(delta[j]));
      if (!std::isfinite(rho[j]))
        throw NumericalFailure(FailureKind::NewtonDivergence, "newton iterate is not finite", j);
      if (!(rho[j] > 0.0))
        throw NumericalFailure(FailureKind::PositivityLoss, "newton iterate lost positivity", j);
    }
    g = residual(rho);
    const double gnorm = detail::max_abs(g);
    if (dnorm <= newton_tol || gnorm <= newton_tol) return {std::move(rho), it, gnorm};
  }
  throw NumericalFailure(FailureKind::NewtonDivergence,
                         "newton did not converge in " + std::to_string(max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// 2D

enum class Stencil2D { Wide, Reduced };

inline const char* to_string(Stencil2D s) { return s == Stencil2D::Wide ? "wide" : "reduced"; }

/// Periodic five-point operator on an n1 x n2 grid (row-major, i the first index):
/// y = center*x - east*x(i+1) - west*x(i-1) - north*x(j+1) - south*x(j-1).
struct PeriodicFivePoint {
  std::size_t n1 = 0, n2 = 0;
  Field center, east, west, north, south;

  std::size_t idx(std::ptrdiff_t i, std::ptrdiff_t j) const {
    return wrap(i, n1) * n2 + wrap(j, n2);
  }

  void apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n1; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      for (std::size_t j = 0; j < n2; ++j) {
        const auto jj = static_cast<std::ptrdiff_t>(j);
        const std::size_t k = i * n2 + j;
        y[k] = center[k] * x[k] - east[k] * x[idx(ii + 1, jj)] - west[k] * x[idx(ii - 1, jj)] -
               north[k] * x[idx(ii, jj + 1)] - south[k] * x[idx(ii, jj - 1)];
      }
    }
  }
};

namespace detail {

// Jacobi-preconditioned conjugate gradients. The operators assembled below are
// symmetric positive definite (identity plus a weighted graph Laplacian).
// Stops on the true max-norm relative residual.
inline int pcg(const PeriodicFivePoint& op, std::span<const double> b, Field& x, double tol,
               int max_iter) {
  const std::size_t n = b.size();
  const double bnorm = max_abs(b);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return 0;
  }
  Field r(n), z(n), p(n), ap(n);
  auto true_residual = [&] {
    op.apply(x, r);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - r[k];
    return max_abs(r) / bnorm;
  };
  double rel = true_residual();
  if (rel <= tol) return 0;

  int it = 0;
  while (it < max_iter) {
    // (Re)start from the true residual.
    for (std::size_t k = 0; k < n; ++k) {
      z[k] = r[k] / op.center[k];
      p[k] = z[k];
    }
    double rz = 0.0;
    for (std::size_t k = 0; k < n; ++k) rz += r[k] * z[k];
    while (it < max_iter) {
      op.apply(p, ap);
      double pap = 0.0;
      for (std::size_t k = 0; k < n; ++k) pap += p[k] * ap[k];
      if (!(pap > 0.0) || !std::isfinite(pap)) break;
      const double a = rz / pap;
      for (std::size_t k = 0; k < n; ++k) {
        x[k] += a * p[k];
        r[k] -= a * ap[k];
      }
      ++it;
      if (max_abs(r) / bnorm <= 0.1 * tol) break;
      double rz_new = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        z[k] = r[k] / op.center[k];
        rz_new += r[k] * z[k];
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    }
    const double prev = rel;
    rel = true_residual();
    if (rel <= tol) return it;
    if (!std::isfinite(rel)) break;
    // No progress over a whole cycle: stagnated at round-off.
    if (rel >= prev) break;
  }
  throw NumericalFailure(FailureKind::SolverFailure,
                         "conjugate gradients did not reach relative residual " +
                             sci(tol) + " (reached " + sci(rel) + " after " +
                             std::to_string(it) + " iterations)");
}

} // namespace detail

/// Builds the full-grid five-point operator of the reduced stencil.
inline PeriodicFivePoint reduced_operator_2d(const EllipticCoefficients& c, const Grid2D& g) {
  const std::size_t m1 = g.m1(), m2 = g.m2();
  const double bx = c.beta / (g.dx() * g.dx());
  const double by = c.beta / (g.dy() * g.dy());
  PeriodicFivePoint op{m1, m2, Field(g.size()), Field(g.size()), Field(g.size()),
                       Field(g.size()), Field(g.size())};
  for (std::size_t i = 0; i < m1; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    for (std::size_t j = 0; j < m2; ++j) {
      const auto jj = static_cast<std::ptrdiff_t>(j);
      const std::size_t k = g.index(ii, jj);
      const double mc = c.mobility[k];
      op.east[k] = bx * c.mobility[g.index(ii + 1, jj)];
      op.west[k] = bx * mc;
      op.north[k] = by * c.mobility[g.index(ii, jj + 1)];
      op.south[k] = by * mc;
      op.center[k] = 1.0 + op.east[k] + op.west[k] + op.north[k] + op.south[k];
    }
  }
  return op;
}

/// Builds the five-point operator of one parity sublattice (pi, pj) of the wide
/// stencil; sublattice cell (k, l) is global cell (pi + 2k, pj + 2l).
inline PeriodicFivePoint wide_sublattice_operator_2d(const EllipticCoefficients& c,
                                                     const Grid2D& g, std::size_t pi,
                                                     std::size_t pj) {
  const std::size_t n1 = g.m1() / 2, n2 = g.m2() / 2;
  const double bx = c.beta / (4.0 * g.dx() * g.dx());
  const double by = c.beta / (4.0 * g.dy() * g.dy());
  const std::size_t n = n1 * n2;
  PeriodicFivePoint op{n1, n2, Field(n), Field(n), Field(n), Field(n), Field(n)};
  for (std::size_t k = 0; k < n1; ++k) {
    for (std::size_t l = 0; l < n2; ++l) {
      const auto i = static_cast<std::ptrdiff_t>(pi + 2 * k);
      const auto j = static_cast<std::ptrdiff_t>(pj + 2 * l);
      const std::size_t s = k * n2 + l;
      op.east[s] = bx * c.mobility[g.index(i + 1, j)];
      op.west[s] = bx * c.mobility[g.index(i - 1, j)];
      op.north[s] = by * c.mobility[g.index(i, j + 1)];
      op.south[s] = by * c.mobility[g.index(i, j - 1)];
      op.center[s] = 1.0 + op.east[s] + op.west[s] + op.north[s] + op.south[s];
    }
  }
  return op;
}

/// Forward application of either 2D operator on the full grid.
inline Field apply_elliptic_2d(std::span<const double> rho, const EllipticCoefficients& c,
                               const Grid2D& g, Stencil2D stencil) {
  Field out(g.size());
  const double s = stencil == Stencil2D::Wide ? 0.25 : 1.0;
  const std::ptrdiff_t w = stencil == Stencil2D::Wide ? 2 : 1;
  const double bx = s * c.beta / (g.dx() * g.dx());
  const double by = s * c.beta / (g.dy() * g.dy());
  for (std::size_t i = 0; i < g.m1(); ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    for (std::size_t j = 0; j < g.m2(); ++j) {
      const auto jj = static_cast<std::ptrdiff_t>(j);
      const std::size_t k = g.index(ii, jj);
      double me, mw, mn, ms;
      if (stencil == Stencil2D::Wide) {
        me = c.mobility[g.index(ii + 1, jj)];
        mw = c.mobility[g.index(ii - 1, jj)];
        mn = c.mobility[g.index(ii, jj + 1)];
        ms = c.mobility[g.index(ii, jj - 1)];
      } else {
        me = c.mobility[g.index(ii + 1, jj)];
        mw = c.mobility[k];
        mn = c.mobility[g.index(ii, jj + 1)];
        ms = c.mobility[k];
      }
      const double lap_x = me * (rho[g.index(ii + w, jj)] - rho[k]) -
                           mw * (rho[k] - rho[g.index(ii - w, jj)]);
      const double lap_y = mn * (rho[g.index(ii, jj + w)] - rho[k]) -
                           ms * (rho[k] - rho[g.index(ii, jj - w)]);
      out[k] = rho[k] - bx * lap_x - by * lap_y;
    }
  }
  return out;
}

/// Solves the 2D density equation with either stencil by preconditioned
/// conjugate gradients. The wide stencil is split into its four independent
/// parity sublattices. `max_iter` <= 0 selects the default cap 10 * M1 * M2.
inline LinearSolveInfo solve_elliptic_2d(std::span<const double> dphi,
                                         const EllipticCoefficients& c, const Grid2D& g,
                                         Stencil2D stencil, double tol = 1e-11,
                                         int max_iter = 0) {
  detail::check_coefficients(c, g.size());
  if (dphi.size() != g.size()) throw InvalidStateError("2D elliptic solve: size mismatch");
  if (max_iter <= 0) max_iter = static_cast<int>(10 * g.size());

  const double shift = detail::mean(dphi);
  const Field dev = detail::deviation(dphi, shift);
  if (stencil == Stencil2D::Reduced) {
    const auto op = reduced_operator_2d(c, g);
    Field x = dev;
    const int it = detail::pcg(op, dev, x, tol, max_iter);
    detail::add_constant(x, shift);
    return {std::move(x), it};
  }

  if (g.m1() % 2 != 0 || g.m2() % 2 != 0)
    throw UnsupportedGridError("wide 2D stencil requires even M1 and M2");
  const std::size_t n1 = g.m1() / 2, n2 = g.m2() / 2;
  Field x(g.size());
  int total = 0;
  for (std::size_t pi = 0; pi < 2; ++pi) {
    for (std::size_t pj = 0; pj < 2; ++pj) {
      const auto op = wide_sublattice_operator_2d(c, g, pi, pj);
      Field rhs(n1 * n2);
      for (std::size_t k = 0; k < n1; ++k)
        for (std::size_t l = 0; l < n2; ++l)
          rhs[k * n2 + l] = dev[(pi + 2 * k) * g.m2() + pj + 2 * l];
      Field xs = rhs;
      total += detail::pcg(op, rhs, xs, tol, max_iter);
      for (std::size_t k = 0; k < n1; ++k)
        for (std::size_t l = 0; l < n2; ++l) x[(pi + 2 * k) * g.m2() + pj + 2 * l] = xs[k * n2 + l];
    }
  }
  detail::add_constant(x, shift);
  return {std::move(x), total};
}

} // namespace allspeed
