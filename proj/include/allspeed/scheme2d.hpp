#pragma once

// Two-dimensional operators and the asymptotic-preserving step on the
// periodic unit square.

#include <allspeed/elliptic.hpp>
#include <allspeed/integrate.hpp>
#include <allspeed/scheme1d.hpp>

#include <algorithm>
#include <cmath>

namespace allspeed {

using StepResult2D = StepResult<FluidState2D>;

struct DirectionalSpeeds {
  Field a_x; ///< a_x[index(i, j)] = A_{i+1/2, j}
  Field a_y; ///< a_y[index(i, j)] = A_{i, j+1/2}
};

/// Largest |lambda| of both directional Jacobians in one cell.
inline double cell_speed_2d(const EquationOfState& eos, double rho, double u1, double u2,
                            double alpha) {
  return std::max(std::abs(u1), std::abs(u2)) + std::sqrt(alpha * eos.pressure_derivative(rho));
}

inline DirectionalSpeeds directional_speeds_2d(const FluidState2D& s, const EquationOfState& eos,
                                               double alpha) {
  const Grid2D& g = s.grid();
  Field lam(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    lam[k] = cell_speed_2d(eos, s.rho()[k], s.u1(k), s.u2(k), alpha);
  DirectionalSpeeds d{Field(g.size()), Field(g.size())};
  for (std::size_t i = 0; i < g.m1(); ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    for (std::size_t j = 0; j < g.m2(); ++j) {
      const auto jj = static_cast<std::ptrdiff_t>(j);
      const std::size_t k = g.index(ii, jj);
      d.a_x[k] = interface_speed(lam[k], lam[g.index(ii + 1, jj)]);
      d.a_y[k] = interface_speed(lam[k], lam[g.index(ii, jj + 1)]);
    }
  }
  return d;
}

namespace detail {

/// Centred x difference (f_{i+1} - f_{i-1}) / (2 dx).
inline Field dx_centered(const Field& f, const Grid2D& g) {
  Field d(g.size());
  for (std::size_t i = 0; i < g.m1(); ++i)
    for (std::size_t j = 0; j < g.m2(); ++j) {
      const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
      d[g.index(ii, jj)] = (f[g.index(ii + 1, jj)] - f[g.index(ii - 1, jj)]) / (2.0 * g.dx());
    }
  return d;
}
inline Field dy_centered(const Field& f, const Grid2D& g) {
  Field d(g.size());
  for (std::size_t i = 0; i < g.m1(); ++i)
    for (std::size_t j = 0; j < g.m2(); ++j) {
      const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
      d[g.index(ii, jj)] = (f[g.index(ii, jj + 1)] - f[g.index(ii, jj - 1)]) / (2.0 * g.dy());
    }
  return d;
}

/// LLF dissipation part of the x flux difference:
/// [A_{i-1/2}(U_i - U_{i-1}) - A_{i+1/2}(U_{i+1} - U_i)] / (2 dx).
/// `speed` holds A at the x faces i+1/2 in the layout of a_x.
inline Field llf_diss_x(const Field& u, const Field& speed, const Grid2D& g) {
  Field d(g.size());
  for (std::size_t i = 0; i < g.m1(); ++i)
    for (std::size_t j = 0; j < g.m2(); ++j) {
      const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
      const std::size_t k = g.index(ii, jj), e = g.index(ii + 1, jj), w = g.index(ii - 1, jj);
      d[k] = (speed[w] * (u[k] - u[w]) - speed[k] * (u[e] - u[k])) / (2.0 * g.dx());
    }
  return d;
}
inline Field llf_diss_y(const Field& u, const Field& speed, const Grid2D& g) {
  Field d(g.size());
  for (std::size_t i = 0; i < g.m1(); ++i)
    for (std::size_t j = 0; j < g.m2(); ++j) {
      const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
      const std::size_t k = g.index(ii, jj), n = g.index(ii, jj + 1), s = g.index(ii, jj - 1);
      d[k] = (speed[s] * (u[k] - u[s]) - speed[k] * (u[n] - u[k])) / (2.0 * g.dy());
    }
  return d;
}

/// Explicit momentum terms. The copies used in Dphi differ from the update
/// only when `dphi2_literal` is false: the y dissipation of q1 and the x
/// dissipation of q2 then take the other direction's face speeds.
struct ExplicitMomentum {
  Field r1; ///< explicit part of the x-momentum update, divided by dt
  Field r2;
  Field r1_dphi; ///< r1 with the mixed-term pairing used in Dphi
  Field r2_dphi;
};

inline ExplicitMomentum explicit_momentum_2d(const FluidState2D& s, const EquationOfState& eos,
                                             const SchemeParams& params,
                                             const DirectionalSpeeds& a) {
  const Grid2D& g = s.grid();
  const std::size_t n = g.size();
  Field fxx(n), fxy(n), fyy(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = s.rho()[k], u1 = s.u1(k), u2 = s.u2(k);
    const double ap = params.alpha * eos.pressure(r);
    fxx[k] = r * u1 * u1 + ap;
    fxy[k] = r * u1 * u2;
    fyy[k] = r * u2 * u2 + ap;
  }
  const Field dxx = dx_centered(fxx, g), dyxy = dy_centered(fxy, g);
  const Field dxxy = dx_centered(fxy, g), dyy = dy_centered(fyy, g);
  const Field q1x = llf_diss_x(s.q1(), a.a_x, g), q1y = llf_diss_y(s.q1(), a.a_y, g);
  const Field q2x = llf_diss_x(s.q2(), a.a_x, g), q2y = llf_diss_y(s.q2(), a.a_y, g);

  ExplicitMomentum m{Field(n), Field(n), Field(n), Field(n)};
  for (std::size_t k = 0; k < n; ++k) {
    m.r1[k] = dxx[k] + dyxy[k] + q1x[k] + q1y[k];
    m.r2[k] = dxxy[k] + dyy[k] + q2x[k] + q2y[k];
  }
  if (params.dphi2_literal) {
    m.r1_dphi = m.r1;
    m.r2_dphi = m.r2;
  } else {
    const Field q1y_sw = llf_diss_y(s.q1(), a.a_x, g);
    const Field q2x_sw = llf_diss_x(s.q2(), a.a_y, g);
    for (std::size_t k = 0; k < n; ++k) {
      m.r1_dphi[k] = dxx[k] + dyxy[k] + q1x[k] + q1y_sw[k];
      m.r2_dphi[k] = dxxy[k] + dyy[k] + q2x_sw[k] + q2y[k];
    }
  }
  return m;
}

} // namespace detail

/// Explicit right-hand side of the 2D density equation:
/// rho - dt (D^x q1 + D^y q2 + LLF dissipation of rho)
///     + dt^2 (D^x R1 + D^y R2), R_k the explicit momentum terms.
inline Field assemble_dphi_2d(const FluidState2D& s, const EquationOfState& eos,
                              const SchemeParams& params, double dt) {
  const Grid2D& g = s.grid();
  const auto a = directional_speeds_2d(s, eos, params.alpha);
  const auto m = detail::explicit_momentum_2d(s, eos, params, a);
  const Field dq1 = detail::dx_centered(s.q1(), g), dq2 = detail::dy_centered(s.q2(), g);
  const Field rx = detail::llf_diss_x(s.rho(), a.a_x, g), ry = detail::llf_diss_y(s.rho(), a.a_y, g);
  const Field d1 = detail::dx_centered(m.r1_dphi, g), d2 = detail::dy_centered(m.r2_dphi, g);
  Field dphi(g.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    dphi[k] = s.rho()[k] - dt * (dq1[k] + dq2[k] + rx[k] + ry[k]) + dt * dt * (d1[k] + d2[k]);
  return dphi;
}

/// Max-norm residual of the fully discrete 2D scheme at the new state,
/// relative to max rho^{n+1}. The density row uses the implicit mass flux of
/// the solved stencil: the wide stencil linearises p(rho^{n+1}) as
/// p'(rho^n) rho^{n+1} in the centred pressure gradient; the reduced stencil
/// uses a compact face gradient with the mobility of the upper neighbour.
inline double consistency_residual_2d(const FluidState2D& sn, const FluidState2D& snp1,
                                      const EquationOfState& eos, const SchemeParams& params,
                                      Stencil2D stencil, double dt) {
  const Grid2D& g = sn.grid();
  const std::size_t n = g.size();
  const double c = params.implicit_pressure_coeff();
  const auto a = directional_speeds_2d(sn, eos, params.alpha);
  const auto m = detail::explicit_momentum_2d(sn, eos, params, a);
  const Field& r1 = snp1.rho();
  const Field mob = frozen_mobility(eos, sn.rho());

  Field p1(n);
  for (std::size_t k = 0; k < n; ++k) p1[k] = eos.pressure(r1[k]);
  const Field dpx = detail::dx_centered(p1, g), dpy = detail::dy_centered(p1, g);

  // Density residual.
  const Field rx = detail::llf_diss_x(sn.rho(), a.a_x, g), ry = detail::llf_diss_y(sn.rho(), a.a_y, g);
  Field div(n);
  Field qh1(n), qh2(n);
  for (std::size_t k = 0; k < n; ++k) {
    qh1[k] = sn.q1()[k] - dt * m.r1[k];
    qh2[k] = sn.q2()[k] - dt * m.r2[k];
  }
  if (stencil == Stencil2D::Wide) {
    const Field drx = detail::dx_centered(r1, g), dry = detail::dy_centered(r1, g);
    Field ql1(n), ql2(n);
    for (std::size_t k = 0; k < n; ++k) {
      ql1[k] = qh1[k] - dt * c * mob[k] * drx[k];
      ql2[k] = qh2[k] - dt * c * mob[k] * dry[k];
    }
    const Field d1 = detail::dx_centered(ql1, g), d2 = detail::dy_centered(ql2, g);
    for (std::size_t k = 0; k < n; ++k) div[k] = d1[k] + d2[k];
  } else {
    const Field d1 = detail::dx_centered(qh1, g), d2 = detail::dy_centered(qh2, g);
    for (std::size_t i = 0; i < g.m1(); ++i)
      for (std::size_t j = 0; j < g.m2(); ++j) {
        const auto ii = static_cast<std::ptrdiff_t>(i), jj = static_cast<std::ptrdiff_t>(j);
        const std::size_t k = g.index(ii, jj);
        const std::size_t e = g.index(ii + 1, jj), w = g.index(ii - 1, jj);
        const std::size_t no = g.index(ii, jj + 1), so = g.index(ii, jj - 1);
        // Compact pressure fluxes at the four faces.
        const double fe = mob[e] * (r1[e] - r1[k]) / g.dx();
        const double fw = mob[k] * (r1[k] - r1[w]) / g.dx();
        const double fn = mob[no] * (r1[no] - r1[k]) / g.dy();
        const double fs = mob[k] * (r1[k] - r1[so]) / g.dy();
        div[k] = d1[k] + d2[k] - dt * c * ((fe - fw) / g.dx() + (fn - fs) / g.dy());
      }
  }

  double res = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double rd = r1[k] - sn.rho()[k] + dt * (div[k] + rx[k] + ry[k]);
    const double rq1 = snp1.q1()[k] - sn.q1()[k] + dt * m.r1[k] + dt * c * dpx[k];
    const double rq2 = snp1.q2()[k] - sn.q2()[k] + dt * m.r2[k] + dt * c * dpy[k];
    res = std::max({res, std::abs(rd), std::abs(rq1), std::abs(rq2)});
    scale = std::max(scale, std::abs(r1[k]));
  }
  return res / scale;
}

/// One asymptotic-preserving step in 2D. The wide stencil needs even M1, M2.
inline StepResult2D step_ap_2d(const FluidState2D& s, const EquationOfState& eos,
                               const SchemeParams& params, Stencil2D stencil, double dt) {
  require_valid(params);
  detail::check_step_dt(dt);
  const Grid2D& g = s.grid();
  const std::size_t n = g.size();
  const double c = params.implicit_pressure_coeff();

  StepReport rep;
  rep.dt_used = dt;
  for (std::size_t k = 0; k < n; ++k)
    rep.max_wave_speed =
        std::max(rep.max_wave_speed, cell_speed_2d(eos, s.rho()[k], s.u1(k), s.u2(k), params.alpha));

  const Field dphi = assemble_dphi_2d(s, eos, params, dt);
  const EllipticCoefficients coeff{c * dt * dt, frozen_mobility(eos, s.rho())};
  auto lr = solve_elliptic_2d(dphi, coeff, g, stencil, params.linear_tol);
  Field rho1 = std::move(lr.solution);
  rep.linear_iters = lr.iterations;
  detail::check_new_density(rho1);

  const auto a = directional_speeds_2d(s, eos, params.alpha);
  const auto m = detail::explicit_momentum_2d(s, eos, params, a);
  Field p1(n);
  for (std::size_t k = 0; k < n; ++k) p1[k] = eos.pressure(rho1[k]);
  const Field dpx = detail::dx_centered(p1, g), dpy = detail::dy_centered(p1, g);
  Field q1(n), q2(n);
  for (std::size_t k = 0; k < n; ++k) {
    q1[k] = s.q1()[k] - dt * m.r1[k] - dt * c * dpx[k];
    q2[k] = s.q2()[k] - dt * m.r2[k] - dt * c * dpy[k];
  }
  detail::check_new_momentum(q1);
  detail::check_new_momentum(q2);

  FluidState2D next(g, std::move(rho1), std::move(q1), std::move(q2));
  rep.consistency_residual = consistency_residual_2d(s, next, eos, params, stencil, dt);
  const double cell = g.dx() * g.dy();
  rep.mass_total = detail::sum(next.rho()) * cell;
  rep.momentum_total = detail::sum(next.q1()) * cell;
  rep.momentum2_total = detail::sum(next.q2()) * cell;
  return {std::move(next), rep};
}

/// Integrates the 2D AP scheme from t = 0 to t_final. Adaptive steps use
/// sigma min(dx, dy) / max cell speed.
inline IntegrationResult<FluidState2D> integrate_2d(const FluidState2D& initial,
                                                    const EquationOfState& eos,
                                                    const SchemeParams& params, Stencil2D stencil,
                                                    double t_final,
                                                    const IntegrateOptions& opt = {}) {
  const Grid2D& g = initial.grid();
  return detail::integrate(
      initial, params, std::min(g.dx(), g.dy()), t_final, opt,
      [&](const FluidState2D& s, double dt) { return step_ap_2d(s, eos, params, stencil, dt); },
      [&](const FluidState2D& s) {
        double r = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k)
          r = std::max(r, cell_speed_2d(eos, s.rho()[k], s.u1(k), s.u2(k), params.alpha));
        return r;
      },
      [&](const FluidState2D& s) {
        return relative_entropy(eos, params.epsilon, s.rho(), s.q1(), s.q2());
      });
}

} // namespace allspeed
