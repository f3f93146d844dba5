#pragma once

#include <allspeed/errors.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace allspeed {

using Field = std::vector<double>;

/// Barotropic pressure law p(rho) = Lambda * rho^gamma.
class EquationOfState {
public:
  EquationOfState(double lambda_coeff, double gamma)
      : lambda_(lambda_coeff), gamma_(gamma) {
    if (!(lambda_coeff > 0.0) || !std::isfinite(lambda_coeff))
      throw InvalidStateError("equation of state: lambda_coeff must be > 0");
    if (!(gamma >= 1.0) || !std::isfinite(gamma))
      throw InvalidStateError("equation of state: gamma must be >= 1");
  }

  double lambda_coeff() const noexcept { return lambda_; }
  double gamma() const noexcept { return gamma_; }

  double pressure(double rho) const {
    require_positive(rho);
    return lambda_ * power(rho, gamma_);
  }

  double pressure_derivative(double rho) const {
    require_positive(rho);
    return lambda_ * gamma_ * power(rho, gamma_ - 1.0);
  }

  friend bool operator==(const EquationOfState&, const EquationOfState&) = default;

private:
  static void require_positive(double rho) {
    if (!(rho > 0.0))
      throw InvalidStateError("equation of state evaluated at non-positive density " +
                              std::to_string(rho));
  }

  // Integer exponents are common (gamma = 1, 2); keep them exact.
  static double power(double x, double e) {
    if (e == 0.0) return 1.0;
    if (e == 1.0) return x;
    if (e == 2.0) return x * x;
    return std::pow(x, e);
  }

  double lambda_;
  double gamma_;
};

inline double pressure(const EquationOfState& eos, double rho) { return eos.pressure(rho); }
inline double pressure_derivative(const EquationOfState& eos, double rho) {
  return eos.pressure_derivative(rho);
}

/// Periodic neighbour index.
inline std::size_t wrap(std::ptrdiff_t j, std::size_t m) {
  const auto mm = static_cast<std::ptrdiff_t>(m);
  std::ptrdiff_t r = j % mm;
  if (r < 0) r += mm;
  return static_cast<std::size_t>(r);
}

/// Uniform periodic cell-centred grid on [a, b] with m cells.
class Grid1D {
public:
  Grid1D(double a, double b, std::size_t m) : a_(a), b_(b), m_(m) {
    if (!(b > a)) throw InvalidStateError("grid: require b > a");
    if (m == 0) throw InvalidStateError("grid: cell count must be positive");
  }

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  std::size_t m() const noexcept { return m_; }
  double dx() const noexcept { return (b_ - a_) / static_cast<double>(m_); }
  double center(std::size_t j) const noexcept {
    return a_ + (static_cast<double>(j) + 0.5) * dx();
  }
  std::size_t left(std::size_t j) const noexcept {
    return wrap(static_cast<std::ptrdiff_t>(j) - 1, m_);
  }
  std::size_t right(std::size_t j) const noexcept {
    return wrap(static_cast<std::ptrdiff_t>(j) + 1, m_);
  }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

private:
  double a_;
  double b_;
  std::size_t m_;
};

/// Uniform periodic grid on the unit square; storage is row-major over (i, j)
/// with i the x index.
class Grid2D {
public:
  Grid2D(std::size_t m1, std::size_t m2) : m1_(m1), m2_(m2) {
    if (m1 < 4 || m2 < 4) throw InvalidStateError("2D grid: m1, m2 must be >= 4");
  }

  std::size_t m1() const noexcept { return m1_; }
  std::size_t m2() const noexcept { return m2_; }
  std::size_t size() const noexcept { return m1_ * m2_; }
  double dx() const noexcept { return 1.0 / static_cast<double>(m1_); }
  double dy() const noexcept { return 1.0 / static_cast<double>(m2_); }
  double x_center(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * dx(); }
  double y_center(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * dy(); }

  std::size_t index(std::ptrdiff_t i, std::ptrdiff_t j) const noexcept {
    return wrap(i, m1_) * m2_ + wrap(j, m2_);
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
  std::size_t m1_;
  std::size_t m2_;
};

namespace detail {
inline void check_density(std::span<const double> rho) {
  for (std::size_t j = 0; j < rho.size(); ++j) {
    if (!std::isfinite(rho[j]) || !(rho[j] > 0.0))
      throw InvalidStateError("density must be finite and positive; cell " +
                              std::to_string(j) + " has " + std::to_string(rho[j]));
  }
}
inline void check_finite(std::span<const double> v, const char* name) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j]))
      throw InvalidStateError(std::string(name) + " must be finite; cell " + std::to_string(j));
  }
}
} // namespace detail

/// Density and momentum on a periodic 1D grid. Validated on construction.
class FluidState1D {
public:
  FluidState1D(Grid1D grid, Field rho, Field q)
      : grid_(grid), rho_(std::move(rho)), q_(std::move(q)) {
    if (rho_.size() != grid_.m() || q_.size() != grid_.m())
      throw InvalidStateError("state arrays must have one entry per cell");
    detail::check_density(rho_);
    detail::check_finite(q_, "momentum");
  }

  const Grid1D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return rho_.size(); }
  const Field& rho() const noexcept { return rho_; }
  const Field& q() const noexcept { return q_; }
  double rho(std::size_t j) const noexcept { return rho_[j]; }
  double q(std::size_t j) const noexcept { return q_[j]; }
  double u(std::size_t j) const noexcept { return q_[j] / rho_[j]; }

private:
  Grid1D grid_;
  Field rho_;
  Field q_;
};

class FluidState2D {
public:
  FluidState2D(Grid2D grid, Field rho, Field q1, Field q2)
      : grid_(grid), rho_(std::move(rho)), q1_(std::move(q1)), q2_(std::move(q2)) {
    const auto n = grid_.size();
    if (rho_.size() != n || q1_.size() != n || q2_.size() != n)
      throw InvalidStateError("state arrays must have one entry per cell");
    detail::check_density(rho_);
    detail::check_finite(q1_, "momentum q1");
    detail::check_finite(q2_, "momentum q2");
  }

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return rho_.size(); }
  const Field& rho() const noexcept { return rho_; }
  const Field& q1() const noexcept { return q1_; }
  const Field& q2() const noexcept { return q2_; }
  double u1(std::size_t k) const noexcept { return q1_[k] / rho_[k]; }
  double u2(std::size_t k) const noexcept { return q2_[k] / rho_[k]; }

private:
  Grid2D grid_;
  Field rho_;
  Field q1_;
  Field q2_;
};

struct FixedDt {
  double dt;
};
/// Step chosen each step from the stepper's CFL condition with Courant number sigma.
struct AdaptiveDt {};
using DtPolicy = std::variant<FixedDt, AdaptiveDt>;

struct SchemeParams {
  double epsilon = 1.0;
  double alpha = 1.0;
  double sigma = 0.9;
  DtPolicy dt_policy = AdaptiveDt{};
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  double linear_tol = 1e-11;
  /// Use the mixed LLF-diffusion pairing of the 2D right-hand side exactly as
  /// derived from the momentum rows; false swaps the face speeds in the two
  /// mixed terms.
  bool dphi2_literal = true;

  /// Coefficient (1 - alpha eps^2) / eps^2 of the implicit pressure gradient.
  double implicit_pressure_coeff() const {
    return (1.0 - alpha * epsilon * epsilon) / (epsilon * epsilon);
  }
};

enum class ParamIssue {
  EpsilonNotPositive,
  AlphaNegative,
  AlphaExceedsBound,
  SigmaOutOfRange,
  DtNotPositive,
  NewtonTolNotPositive,
  NewtonMaxIterNotPositive,
  LinearTolNotPositive,
};

inline const char* to_string(ParamIssue p) {
  switch (p) {
  case ParamIssue::EpsilonNotPositive: return "epsilon-not-positive";
  case ParamIssue::AlphaNegative: return "alpha-negative";
  case ParamIssue::AlphaExceedsBound: return "alpha-exceeds-bound";
  case ParamIssue::SigmaOutOfRange: return "sigma-out-of-range";
  case ParamIssue::DtNotPositive: return "dt-not-positive";
  case ParamIssue::NewtonTolNotPositive: return "newton-tol-not-positive";
  case ParamIssue::NewtonMaxIterNotPositive: return "newton-max-iter-not-positive";
  case ParamIssue::LinearTolNotPositive: return "linear-tol-not-positive";
  }
  return "unknown";
}

/// Returns every violated invariant; an empty list means the parameters are valid.
inline std::vector<ParamIssue> validate_params(const SchemeParams& p) {
  std::vector<ParamIssue> issues;
  const bool eps_ok = p.epsilon > 0.0 && std::isfinite(p.epsilon);
  if (!eps_ok) issues.push_back(ParamIssue::EpsilonNotPositive);
  if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) issues.push_back(ParamIssue::AlphaNegative);
  // alpha <= 1/eps^2, written as alpha*eps^2 <= 1 with a rounding allowance so
  // that alpha = 1/eps^2 itself is admitted.
  if (eps_ok && p.alpha * p.epsilon * p.epsilon > 1.0 + 1e-12)
    issues.push_back(ParamIssue::AlphaExceedsBound);
  if (!(p.sigma > 0.0 && p.sigma < 1.0)) issues.push_back(ParamIssue::SigmaOutOfRange);
  if (const auto* f = std::get_if<FixedDt>(&p.dt_policy); f && !(f->dt > 0.0))
    issues.push_back(ParamIssue::DtNotPositive);
  if (!(p.newton_tol > 0.0)) issues.push_back(ParamIssue::NewtonTolNotPositive);
  if (p.newton_max_iter <= 0) issues.push_back(ParamIssue::NewtonMaxIterNotPositive);
  if (!(p.linear_tol > 0.0)) issues.push_back(ParamIssue::LinearTolNotPositive);
  return issues;
}

class ParamError : public Error {
public:
  explicit ParamError(std::vector<ParamIssue> issues)
      : Error(compose(issues)), issues_(std::move(issues)) {}
  const std::vector<ParamIssue>& issues() const noexcept { return issues_; }

private:
  static std::string compose(const std::vector<ParamIssue>& issues) {
    std::string s = "invalid scheme parameters:";
    for (auto i : issues) s += std::string(" ") + to_string(i);
    return s;
  }
  std::vector<ParamIssue> issues_;
};

inline void require_valid(const SchemeParams& p) {
  if (auto issues = validate_params(p); !issues.empty()) throw ParamError(std::move(issues));
}

} // namespace allspeed
