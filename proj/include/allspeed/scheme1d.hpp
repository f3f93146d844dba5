#pragma once

// One-dimensional operators and time steppers: the asymptotic-preserving
// semi-implicit LLF scheme (variants NL, L, LD), the fully explicit LLF
// scheme and a first-order ICE predictor-corrector.

#include <allspeed/elliptic.hpp>
#include <allspeed/errors.hpp>
#include <allspeed/state.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace allspeed {

/// NL: nonlinear stride-2 pressure Laplacian solved by Newton.
/// L:  stride-2 operator linearised with p'(rho^n).
/// LD: three-point operator linearised with p'(rho^n).
enum class SchemeVariant { NL, L, LD };

inline const char* to_string(SchemeVariant v) {
  switch (v) {
  case SchemeVariant::NL: return "NL";
  case SchemeVariant::L: return "L";
  case SchemeVariant::LD: return "LD";
  }
  return "?";
}

struct StepReport {
  double max_wave_speed = 0.0; ///< max over cells of the largest |lambda| at time n
  double mass_total = 0.0;     ///< sum rho * cell volume after the step
  double momentum_total = 0.0; ///< sum q (q1 in 2D) * cell volume after the step
  double momentum2_total = 0.0; ///< sum q2 * cell volume (2D only)
  double consistency_residual = 0.0;
  int newton_iters = 0;
  int linear_iters = 0;
  double dt_used = 0.0;
};

template <class State> struct StepResult {
  State state;
  StepReport report;
};
using StepResult1D = StepResult<FluidState1D>;

struct WaveSpeeds {
  double minus;
  double plus;
};

/// Eigenvalues u -+ sqrt(alpha p'(rho)) of the explicit flux Jacobian.
inline WaveSpeeds wave_speeds(const EquationOfState& eos, double rho, double u, double alpha) {
  const double c = std::sqrt(alpha * eos.pressure_derivative(rho));
  return {u - c, u + c};
}

/// Largest |lambda| in one cell.
inline double cell_speed(const EquationOfState& eos, double rho, double u, double alpha) {
  return std::abs(u) + std::sqrt(alpha * eos.pressure_derivative(rho));
}

inline double interface_speed(double lambda_cell_j, double lambda_cell_j1) {
  return std::max(lambda_cell_j, lambda_cell_j1);
}

/// A[j] = A_{j+1/2} from time-level values.
inline Field interface_speeds_1d(const FluidState1D& s, const EquationOfState& eos, double alpha) {
  const std::size_t m = s.size();
  Field lam(m), a(m);
  for (std::size_t j = 0; j < m; ++j) lam[j] = cell_speed(eos, s.rho(j), s.u(j), alpha);
  for (std::size_t j = 0; j < m; ++j) a[j] = interface_speed(lam[j], lam[s.grid().right(j)]);
  return a;
}

struct FluxPair {
  double f1;
  double f2;
};

/// Time-n parts of the interface flux at j+1/2. The mass component uses the
/// time-n momentum average; its n+1 correction enters through the elliptic
/// operator, never as an explicit average.
inline FluxPair llf_flux_pair(const FluidState1D& s, const EquationOfState& eos, double alpha,
                              std::size_t j) {
  const std::size_t r = s.grid().right(j);
  const double a = interface_speed(cell_speed(eos, s.rho(j), s.u(j), alpha),
                                   cell_speed(eos, s.rho(r), s.u(r), alpha));
  const double gj = s.q(j) * s.u(j) + alpha * eos.pressure(s.rho(j));
  const double gr = s.q(r) * s.u(r) + alpha * eos.pressure(s.rho(r));
  return {0.5 * (s.q(j) + s.q(r)) - 0.5 * a * (s.rho(r) - s.rho(j)),
          0.5 * (gj + gr) - 0.5 * a * (s.q(r) - s.q(j))};
}

struct Fluxes1D {
  Field f1; ///< f1[j] at interface j+1/2
  Field f2;
};

inline Fluxes1D llf_fluxes_1d(const FluidState1D& s, const EquationOfState& eos, double alpha) {
  const std::size_t m = s.size();
  Fluxes1D f{Field(m), Field(m)};
  for (std::size_t j = 0; j < m; ++j) {
    const auto p = llf_flux_pair(s, eos, alpha, j);
    f.f1[j] = p.f1;
    f.f2[j] = p.f2;
  }
  return f;
}

/// (f_{j+1/2} - f_{j-1/2}) / dx
inline Field flux_difference(const Field& f, double dx) {
  const std::size_t m = f.size();
  Field d(m);
  for (std::size_t j = 0; j < m; ++j) d[j] = (f[j] - f[wrap(static_cast<std::ptrdiff_t>(j) - 1, m)]) / dx;
  return d;
}

/// Explicit right-hand side of the density equation.
inline Field assemble_dphi_1d(const FluidState1D& s, const EquationOfState& eos,
                              const SchemeParams& params, double dt) {
  const std::size_t m = s.size();
  const double dx = s.grid().dx();
  const auto f = llf_fluxes_1d(s, eos, params.alpha);
  const Field d1 = flux_difference(f.f1, dx);
  const Field d2 = flux_difference(f.f2, dx);
  Field dphi(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = s.grid().right(j), l = s.grid().left(j);
    dphi[j] = s.rho(j) - dt * d1[j] + dt * dt / (2.0 * dx) * (d2[r] - d2[l]);
  }
  return dphi;
}

/// q^{n+1} from the explicit momentum flux and the implicit centred pressure
/// difference at the new density.
inline Field momentum_update_1d(const FluidState1D& s, std::span<const double> rho_np1,
                                const EquationOfState& eos, const SchemeParams& params,
                                double dt) {
  const std::size_t m = s.size();
  if (rho_np1.size() != m) throw InvalidStateError("momentum update: size mismatch");
  const double dx = s.grid().dx();
  const Field d2 = flux_difference(llf_fluxes_1d(s, eos, params.alpha).f2, dx);
  Field p(m);
  for (std::size_t j = 0; j < m; ++j) p[j] = eos.pressure(rho_np1[j]);
  const double c = params.implicit_pressure_coeff();
  Field q(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = s.grid().right(j), l = s.grid().left(j);
    q[j] = s.q(j) - dt * d2[j] - c * dt / (2.0 * dx) * (p[r] - p[l]);
  }
  return q;
}

namespace detail {

inline void check_step_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw InvalidStateError("time step must be positive and finite");
}

/// Rejects a non-finite or non-positive density (and non-finite momentum)
/// with the offending index.
inline void check_new_density(std::span<const double> rho) {
  for (std::size_t j = 0; j < rho.size(); ++j) {
    if (!std::isfinite(rho[j]))
      throw NumericalFailure(FailureKind::NonFinite, "density is not finite", j);
    if (!(rho[j] > 0.0))
      throw NumericalFailure(FailureKind::PositivityLoss,
                             "density " + std::to_string(rho[j]) + " is not positive", j);
  }
}
inline void check_new_momentum(std::span<const double> q) {
  for (std::size_t j = 0; j < q.size(); ++j)
    if (!std::isfinite(q[j]))
      throw NumericalFailure(FailureKind::NonFinite, "momentum is not finite", j);
}

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline void fill_totals(StepReport& r, const FluidState1D& s) {
  const double dx = s.grid().dx();
  r.mass_total = sum(s.rho()) * dx;
  r.momentum_total = sum(s.q()) * dx;
}

} // namespace detail

/// Max-norm residual of the fully discrete coupled scheme at (rho^{n+1}, q^{n+1}),
/// relative to max rho^{n+1}. The density row is written in flux form with the
/// implicit mass flux the variant actually solves for:
///   NL: the average of q^{n+1};
///   L:  the average of q^{n+1} with p(rho^{n+1}) linearised as p'(rho^n) rho^{n+1};
///   LD: the time-n predicted average plus a compact pressure flux at j+1/2.
/// The momentum row uses p(rho^{n+1}) for every variant.
inline double consistency_residual_1d(const FluidState1D& sn, const FluidState1D& snp1,
                                      const EquationOfState& eos, const SchemeParams& params,
                                      SchemeVariant variant, double dt) {
  const std::size_t m = sn.size();
  const double dx = sn.grid().dx();
  const double c = params.implicit_pressure_coeff();
  const auto f = llf_fluxes_1d(sn, eos, params.alpha);
  const Field d2 = flux_difference(f.f2, dx);
  const Field a = interface_speeds_1d(sn, eos, params.alpha);
  const Field& rho1 = snp1.rho();
  Field p1(m);
  for (std::size_t j = 0; j < m; ++j) p1[j] = eos.pressure(rho1[j]);

  // Implicit mass flux at every interface j+1/2.
  Field mass_flux(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = sn.grid().right(j);
    double implicit_avg = 0.0;
    switch (variant) {
    case SchemeVariant::NL: implicit_avg = 0.5 * (snp1.q(j) + snp1.q(r)); break;
    case SchemeVariant::L: {
      auto q_lin = [&](std::size_t k) {
        const std::size_t kr = sn.grid().right(k), kl = sn.grid().left(k);
        return sn.q(k) - dt * d2[k] -
               c * dt / (2.0 * dx) * eos.pressure_derivative(sn.rho(k)) * (rho1[kr] - rho1[kl]);
      };
      implicit_avg = 0.5 * (q_lin(j) + q_lin(r));
      break;
    }
    case SchemeVariant::LD: {
      const double predicted = 0.5 * (sn.q(j) - dt * d2[j] + sn.q(r) - dt * d2[r]);
      implicit_avg = predicted - c * dt / dx * eos.pressure_derivative(sn.rho(r)) * (rho1[r] - rho1[j]);
      break;
    }
    }
    mass_flux[j] = implicit_avg - 0.5 * a[j] * (sn.rho(r) - sn.rho(j));
  }

  double res = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t l = sn.grid().left(j), r = sn.grid().right(j);
    const double rd = rho1[j] - sn.rho(j) + dt / dx * (mass_flux[j] - mass_flux[l]);
    const double rq = snp1.q(j) - sn.q(j) + dt * d2[j] + c * dt / (2.0 * dx) * (p1[r] - p1[l]);
    res = std::max({res, std::abs(rd), std::abs(rq)});
    scale = std::max(scale, std::abs(rho1[j]));
  }
  return res / scale;
}

/// One step of the asymptotic-preserving scheme.
inline StepResult1D step_ap_1d(const FluidState1D& s, const EquationOfState& eos,
                               const SchemeParams& params, SchemeVariant variant, double dt) {
  require_valid(params);
  detail::check_step_dt(dt);
  const double dx = s.grid().dx();
  const double beta = params.implicit_pressure_coeff() * dt * dt;

  StepReport rep;
  rep.dt_used = dt;
  for (std::size_t j = 0; j < s.size(); ++j)
    rep.max_wave_speed = std::max(rep.max_wave_speed, cell_speed(eos, s.rho(j), s.u(j), params.alpha));

  const Field dphi = assemble_dphi_1d(s, eos, params, dt);
  Field rho1;
  switch (variant) {
  case SchemeVariant::NL: {
    auto nr = solve_elliptic_nl_1d(s.rho(), dphi, beta, eos, dx, params.newton_tol,
                                   params.newton_max_iter, params.linear_tol);
    rho1 = std::move(nr.solution);
    rep.newton_iters = nr.iterations;
    rep.linear_iters = 2 * nr.iterations;
    break;
  }
  case SchemeVariant::L:
  case SchemeVariant::LD: {
    const EllipticCoefficients coeff{beta, frozen_mobility(eos, s.rho())};
    auto lr = variant == SchemeVariant::L ? solve_elliptic_l_1d(dphi, coeff, dx, params.linear_tol)
                                          : solve_elliptic_ld_1d(dphi, coeff, dx, params.linear_tol);
    rho1 = std::move(lr.solution);
    rep.linear_iters = lr.iterations;
    break;
  }
  }
  detail::check_new_density(rho1);
  Field q1 = momentum_update_1d(s, rho1, eos, params, dt);
  detail::check_new_momentum(q1);

  FluidState1D next(s.grid(), std::move(rho1), std::move(q1));
  rep.consistency_residual = consistency_residual_1d(s, next, eos, params, variant, dt);
  detail::fill_totals(rep, next);
  return {std::move(next), rep};
}

/// Largest |u| + sqrt(p'(rho))/eps of the original system.
inline double max_acoustic_speed(const FluidState1D& s, const EquationOfState& eos, double epsilon) {
  double r = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j)
    r = std::max(r, std::abs(s.u(j)) + std::sqrt(eos.pressure_derivative(s.rho(j))) / epsilon);
  return r;
}

/// Fully explicit LLF step of the original system with the full pressure
/// p/eps^2 in the momentum flux.
inline StepResult1D step_explicit_llf_1d(const FluidState1D& s, const EquationOfState& eos,
                                         const SchemeParams& params, double dt) {
  detail::check_step_dt(dt);
  if (!(params.epsilon > 0.0)) throw ParamError({ParamIssue::EpsilonNotPositive});
  const std::size_t m = s.size();
  const double dx = s.grid().dx();
  const double inv_eps2 = 1.0 / (params.epsilon * params.epsilon);

  Field lam(m), g(m);
  StepReport rep;
  rep.dt_used = dt;
  for (std::size_t j = 0; j < m; ++j) {
    lam[j] = std::abs(s.u(j)) + std::sqrt(eos.pressure_derivative(s.rho(j))) / params.epsilon;
    g[j] = s.q(j) * s.u(j) + inv_eps2 * eos.pressure(s.rho(j));
    rep.max_wave_speed = std::max(rep.max_wave_speed, lam[j]);
  }
  Field f1(m), f2(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = s.grid().right(j);
    const double a = std::max(lam[j], lam[r]);
    f1[j] = 0.5 * (s.q(j) + s.q(r)) - 0.5 * a * (s.rho(r) - s.rho(j));
    f2[j] = 0.5 * (g[j] + g[r]) - 0.5 * a * (s.q(r) - s.q(j));
  }
  Field rho1(m), q1(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t l = s.grid().left(j);
    rho1[j] = s.rho(j) - dt / dx * (f1[j] - f1[l]);
    q1[j] = s.q(j) - dt / dx * (f2[j] - f2[l]);
  }
  detail::check_new_density(rho1);
  detail::check_new_momentum(q1);
  FluidState1D next(s.grid(), std::move(rho1), std::move(q1));
  detail::fill_totals(rep, next);
  return {std::move(next), rep};
}

/// First-order ICE: LLF predictor without pressure, then a three-point
/// implicit pressure correction with coefficient dt^2/eps^2 and frozen
/// p'(rho^n), followed by an explicit centred momentum correction.
inline StepResult1D step_ice_1d(const FluidState1D& s, const EquationOfState& eos,
                                const SchemeParams& params, double dt) {
  detail::check_step_dt(dt);
  if (!(params.epsilon > 0.0)) throw ParamError({ParamIssue::EpsilonNotPositive});
  const std::size_t m = s.size();
  const double dx = s.grid().dx();
  const double inv_eps2 = 1.0 / (params.epsilon * params.epsilon);

  StepReport rep;
  rep.dt_used = dt;
  for (std::size_t j = 0; j < m; ++j) rep.max_wave_speed = std::max(rep.max_wave_speed, std::abs(s.u(j)));

  // Predictor: the pressure-free subsystem has the double eigenvalue u.
  const auto f = llf_fluxes_1d(s, eos, 0.0);
  const Field d1 = flux_difference(f.f1, dx);
  const Field d2 = flux_difference(f.f2, dx);
  Field rho_star(m), q_star(m);
  for (std::size_t j = 0; j < m; ++j) {
    rho_star[j] = s.rho(j) - dt * d1[j];
    q_star[j] = s.q(j) - dt * d2[j];
  }

  const EllipticCoefficients coeff{dt * dt * inv_eps2, frozen_mobility(eos, s.rho())};
  auto lr = solve_elliptic_ld_1d(rho_star, coeff, dx, params.linear_tol);
  Field rho1 = std::move(lr.solution);
  detail::check_new_density(rho1);
  rep.linear_iters = lr.iterations;

  Field p(m);
  for (std::size_t j = 0; j < m; ++j) p[j] = eos.pressure(rho1[j]);
  Field q1(m);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = s.grid().right(j), l = s.grid().left(j);
    q1[j] = q_star[j] - dt * inv_eps2 / (2.0 * dx) * (p[r] - p[l]);
  }
  detail::check_new_momentum(q1);

  const Field lhs = apply_elliptic_ld_1d(rho1, coeff, dx);
  double res = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    res = std::max(res, std::abs(lhs[j] - rho_star[j]));
    scale = std::max(scale, std::abs(rho1[j]));
  }
  rep.consistency_residual = res / scale;

  FluidState1D next(s.grid(), std::move(rho1), std::move(q1));
  detail::fill_totals(rep, next);
  return {std::move(next), rep};
}

} // namespace allspeed
