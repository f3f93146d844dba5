#pragma once

#include <allspeed/errors.hpp>
#include <allspeed/state.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace allspeed {

/// Row i reads  sub[i] x[i-1] + diag[i] x[i] + super[i] x[i+1] = rhs[i]
/// with indices taken modulo N, so sub[0] and super[N-1] are the corner
/// couplings. N = 1 and N = 2 are accepted; the wrapped couplings then fold
/// onto the same unknowns.
struct PeriodicTridiagonalSystem {
  Field sub;
  Field diag;
  Field super;
  Field rhs;

  std::size_t size() const noexcept { return diag.size(); }
};

/// y = A x for the periodic tridiagonal matrix of `sys`.
inline Field apply(const PeriodicTridiagonalSystem& sys, const Field& x) {
  const std::size_t n = sys.size();
  Field y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = wrap(static_cast<std::ptrdiff_t>(i) - 1, n);
    const std::size_t r = wrap(static_cast<std::ptrdiff_t>(i) + 1, n);
    y[i] = sys.sub[i] * x[l] + sys.diag[i] * x[i] + sys.super[i] * x[r];
  }
  return y;
}

inline double relative_residual(const PeriodicTridiagonalSystem& sys, const Field& x) {
  const Field ax = apply(sys, x);
  double rnorm = 0.0;
  double bnorm = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double r = ax[i] - sys.rhs[i];
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    rnorm = std::max(rnorm, std::abs(r));
    bnorm = std::max(bnorm, std::abs(sys.rhs[i]));
  }
  return bnorm > 0.0 ? rnorm / bnorm : rnorm;
}

/// Normwise backward error |Ax - b| / (|A| |x| + |b|), infinity norms.
inline double backward_error(const PeriodicTridiagonalSystem& sys, const Field& x) {
  const Field ax = apply(sys, x);
  double rnorm = 0.0, bnorm = 0.0, anorm = 0.0, xnorm = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    const double r = ax[i] - sys.rhs[i];
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    rnorm = std::max(rnorm, std::abs(r));
    bnorm = std::max(bnorm, std::abs(sys.rhs[i]));
    anorm = std::max(anorm, std::abs(sys.sub[i]) + std::abs(sys.diag[i]) + std::abs(sys.super[i]));
    xnorm = std::max(xnorm, std::abs(x[i]));
  }
  const double scale = anorm * xnorm + bnorm;
  return scale > 0.0 ? rnorm / scale : rnorm;
}

namespace detail {

// Thomas algorithm for the open (non-periodic) tridiagonal part. Returns false
// on a zero or non-finite pivot.
inline bool thomas(const Field& a, const Field& b, const Field& c, const Field& d, Field& x) {
  const std::size_t n = b.size();
  Field cp(n), dp(n);
  double piv = b[0];
  if (piv == 0.0 || !std::isfinite(piv)) return false;
  cp[0] = c[0] / piv;
  dp[0] = d[0] / piv;
  for (std::size_t i = 1; i < n; ++i) {
    piv = b[i] - a[i] * cp[i - 1];
    if (piv == 0.0 || !std::isfinite(piv)) return false;
    cp[i] = c[i] / piv;
    dp[i] = (d[i] - a[i] * dp[i - 1]) / piv;
  }
  x.assign(n, 0.0);
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
  return true;
}

[[noreturn]] inline void singular(const std::string& why) {
  throw NumericalFailure(FailureKind::SingularSystem, "periodic tridiagonal solve: " + why);
}

} // namespace detail

/// O(N) solve of a periodic tridiagonal system by a Sherman-Morrison rank-one
/// correction of the open tridiagonal factorisation. Throws SingularSystem when
/// the correction denominator vanishes or the normwise backward error exceeds
/// `tol`. For the diagonally dominant systems built by the elliptic solvers the
/// backward error and |Ax - b| / |b| agree up to the operator norm.
inline Field solve_periodic_tridiagonal(const PeriodicTridiagonalSystem& sys,
                                        double tol = 1e-11) {
  const std::size_t n = sys.size();
  if (n == 0 || sys.sub.size() != n || sys.super.size() != n || sys.rhs.size() != n)
    throw InvalidStateError("periodic tridiagonal system: inconsistent array sizes");

  Field x(n);
  if (n == 1) {
    const double a = sys.sub[0] + sys.diag[0] + sys.super[0];
    if (a == 0.0) detail::singular("zero 1x1 matrix");
    x[0] = sys.rhs[0] / a;
  } else if (n == 2) {
    const double a00 = sys.diag[0], a01 = sys.sub[0] + sys.super[0];
    const double a10 = sys.sub[1] + sys.super[1], a11 = sys.diag[1];
    const double det = a00 * a11 - a01 * a10;
    const double scale = std::abs(a00 * a11) + std::abs(a01 * a10);
    if (!(std::abs(det) > 64 * std::numeric_limits<double>::epsilon() * scale))
      detail::singular("2x2 determinant vanishes");
    x[0] = (sys.rhs[0] * a11 - a01 * sys.rhs[1]) / det;
    x[1] = (a00 * sys.rhs[1] - a10 * sys.rhs[0]) / det;
  } else {
    const double top_right = sys.sub[0];      // A[0][n-1]
    const double bottom_left = sys.super[n - 1]; // A[n-1][0]
    const double gamma = sys.diag[0] != 0.0 ? -sys.diag[0] : -1.0;

    Field a(sys.sub), b(sys.diag), c(sys.super);
    a[0] = 0.0;
    c[n - 1] = 0.0;
    b[0] -= gamma;
    b[n - 1] -= bottom_left * top_right / gamma;

    Field y, z;
    if (!detail::thomas(a, b, c, sys.rhs, y)) detail::singular("zero pivot");
    Field u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = bottom_left;
    if (!detail::thomas(a, b, c, u, z)) detail::singular("zero pivot");

    const double vz = z[0] + top_right * z[n - 1] / gamma;
    const double denom = 1.0 + vz;
    const double denom_scale = 1.0 + std::abs(z[0]) + std::abs(top_right * z[n - 1] / gamma);
    if (!(std::abs(denom) > 1e3 * std::numeric_limits<double>::epsilon() * denom_scale))
      detail::singular("rank-one correction is singular");
    const double factor = (y[0] + top_right * y[n - 1] / gamma) / denom;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - factor * z[i];
  }

  const double res = backward_error(sys, x);
  if (!(res <= tol)) detail::singular("backward error " + std::to_string(res) + " above tolerance");
  return x;
}

} // namespace allspeed
