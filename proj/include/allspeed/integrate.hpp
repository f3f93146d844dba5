#pragma once

// Time loop, CFL-based step selection and the stable-dt bisection scan.

#include <allspeed/diagnostics.hpp>
#include <allspeed/scheme1d.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace allspeed {

enum class StepperKind { AP, ExplicitLLF, ICE };

inline const char* to_string(StepperKind k) {
  switch (k) {
  case StepperKind::AP: return "ap";
  case StepperKind::ExplicitLLF: return "explicit_llf";
  case StepperKind::ICE: return "ice";
  }
  return "?";
}

/// A 1D time stepper selected at run time.
struct Stepper1D {
  StepperKind kind = StepperKind::AP;
  SchemeVariant variant = SchemeVariant::LD;

  StepResult1D step(const FluidState1D& s, const EquationOfState& eos, const SchemeParams& p,
                    double dt) const {
    switch (kind) {
    case StepperKind::AP: return step_ap_1d(s, eos, p, variant, dt);
    case StepperKind::ExplicitLLF: return step_explicit_llf_1d(s, eos, p, dt);
    case StepperKind::ICE: return step_ice_1d(s, eos, p, dt);
    }
    throw InvalidStateError("unknown stepper");
  }

  /// Speed entering this stepper's explicit CFL condition.
  double cfl_speed(const FluidState1D& s, const EquationOfState& eos, const SchemeParams& p) const {
    double r = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      switch (kind) {
      case StepperKind::AP: r = std::max(r, cell_speed(eos, s.rho(j), s.u(j), p.alpha)); break;
      case StepperKind::ExplicitLLF:
        r = std::max(r, std::abs(s.u(j)) + std::sqrt(eos.pressure_derivative(s.rho(j))) / p.epsilon);
        break;
      case StepperKind::ICE: r = std::max(r, std::abs(s.u(j))); break;
      }
    }
    return r;
  }
};

/// dt from the policy. Adaptive steps use sigma dx / speed; a vanishing speed
/// yields +infinity and the caller clips to the next output time.
inline double policy_dt(const DtPolicy& policy, double sigma, double dx, double speed) {
  if (const auto* f = std::get_if<FixedDt>(&policy)) return f->dt;
  if (!(speed > 0.0)) return std::numeric_limits<double>::infinity();
  return sigma * dx / speed;
}

struct IntegrateOptions {
  /// Snapshot times in [0, t_final]; the loop lands on each exactly.
  std::vector<double> snapshot_times;
  /// A step whose max density exceeds this multiple of the initial max is a
  /// blow-up; 0 disables the check.
  double blowup_factor = 10.0;
  /// When positive, a step that raises the relative entropy by more than this
  /// fraction of its previous value is a blow-up; 0 disables the check.
  double entropy_growth_tol = 0.0;
  /// Called after every accepted step with (step number from 1, time, report).
  std::function<void(std::size_t, double, const StepReport&)> on_step;
};

template <class State> struct Snapshot {
  double time;
  State state;
};

template <class State> struct IntegrationResult {
  State state;
  double time = 0.0;
  std::size_t steps = 0;
  double max_wave_speed = 0.0; ///< max over all steps
  std::vector<Snapshot<State>> snapshots;
};

namespace detail {

inline double max_value(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  return m;
}

inline std::vector<double> sorted_targets(std::vector<double> snaps, double t_final) {
  for (double t : snaps)
    if (!(t >= 0.0 && t <= t_final))
      throw InvalidStateError("snapshot time outside [0, t_final]");
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  return snaps;
}

/// Generic loop shared by the 1D and 2D drivers. `step(state, dt)` returns a
/// StepResult; `speed(state)` is the CFL speed; `dx` the smallest mesh width.
template <class State, class StepFn, class SpeedFn, class EntropyFn>
IntegrationResult<State> integrate(const State& initial, const SchemeParams& params, double dx,
                                   double t_final, const IntegrateOptions& opt, StepFn&& step,
                                   SpeedFn&& speed, EntropyFn&& entropy) {
  if (!(t_final > 0.0)) throw InvalidStateError("t_final must be positive");
  require_valid(params);
  const auto snaps = sorted_targets(opt.snapshot_times, t_final);
  const double rho_cap = opt.blowup_factor > 0.0
                             ? opt.blowup_factor * max_value(initial.rho())
                             : std::numeric_limits<double>::infinity();
  // Guards against a sliver final step produced by rounding of t + dt.
  const double t_eps = 1e-12 * t_final;

  const bool watch_entropy = opt.entropy_growth_tol > 0.0;
  double entropy_prev = watch_entropy ? entropy(initial) : 0.0;
  // Round-off floor for states at or near a constant.
  const double entropy_floor = watch_entropy ? 1e-13 * (1.0 + entropy_prev) : 0.0;

  IntegrationResult<State> out{initial, 0.0, 0, 0.0, {}};
  std::size_t next_snap = 0;
  while (next_snap < snaps.size() && snaps[next_snap] <= t_eps) {
    out.snapshots.push_back({0.0, out.state});
    ++next_snap;
  }
  while (out.time < t_final - t_eps) {
    const double target = next_snap < snaps.size() ? snaps[next_snap] : t_final;
    double dt = policy_dt(params.dt_policy, params.sigma, dx, speed(out.state));
    bool lands = false;
    if (out.time + dt >= target - t_eps) {
      dt = target - out.time;
      lands = true;
    }
    const std::size_t n = out.steps + 1;
    try {
      auto r = step(out.state, dt);
      const double top = max_value(r.state.rho());
      if (top > rho_cap)
        throw NumericalFailure(FailureKind::Blowup,
                               "max density " + std::to_string(top) + " exceeds " +
                                   std::to_string(rho_cap));
      if (watch_entropy) {
        const double h = entropy(r.state);
        if (!(h <= (1.0 + opt.entropy_growth_tol) * entropy_prev + entropy_floor))
          throw NumericalFailure(FailureKind::Blowup, "relative entropy grew from " +
                                                          std::to_string(entropy_prev) + " to " +
                                                          std::to_string(h));
        entropy_prev = h;
      }
      out.state = std::move(r.state);
      out.max_wave_speed = std::max(out.max_wave_speed, r.report.max_wave_speed);
      out.time = lands ? target : out.time + dt;
      out.steps = n;
      if (opt.on_step) opt.on_step(n, out.time, r.report);
    } catch (const NumericalFailure& f) {
      throw f.at_step(n);
    } catch (const InvalidStateError& e) {
      // Raised by state construction or the pressure law on a corrupted step.
      throw NumericalFailure(FailureKind::NonFinite, e.what(), std::nullopt, n);
    }
    while (next_snap < snaps.size() && snaps[next_snap] <= out.time + t_eps) {
      out.snapshots.push_back({out.time, out.state});
      ++next_snap;
    }
  }
  return out;
}

} // namespace detail

/// Integrates from t = 0 to t_final. Numerical failures are rethrown with the
/// failing step number attached.
inline IntegrationResult<FluidState1D> integrate_1d(const FluidState1D& initial,
                                                    const EquationOfState& eos,
                                                    const SchemeParams& params,
                                                    const Stepper1D& stepper, double t_final,
                                                    const IntegrateOptions& opt = {}) {
  return detail::integrate(
      initial, params, initial.grid().dx(), t_final, opt,
      [&](const FluidState1D& s, double dt) { return stepper.step(s, eos, params, dt); },
      [&](const FluidState1D& s) { return stepper.cfl_speed(s, eos, params); },
      [&](const FluidState1D& s) { return relative_entropy(eos, params.epsilon, s.rho(), s.q()); });
}

struct StableDtScan {
  double dt = 0.0;             ///< largest dt found stable
  double max_wave_speed = 0.0; ///< max |lambda| over the stable run
  int runs = 0;
};

/// Per-step growth of the relative entropy tolerated by the stability test.
inline constexpr double kScanEntropyGrowthTol = 0.05;

/// Max wave speed of the run when integrating to T with fixed `dt` is stable:
/// no failure, density below 10 times its initial maximum, and the relative
/// entropy never growing by more than kScanEntropyGrowthTol in one step.
inline std::optional<double> stable_run(const FluidState1D& initial, const EquationOfState& eos,
                                        SchemeParams params, const Stepper1D& stepper, double T,
                                        double dt) {
  params.dt_policy = FixedDt{dt};
  IntegrateOptions opt;
  opt.entropy_growth_tol = kScanEntropyGrowthTol;
  try {
    return integrate_1d(initial, eos, params, stepper, T, opt).max_wave_speed;
  } catch (const NumericalFailure&) {
    return std::nullopt;
  }
}

/// Bisection (12 halvings of the bracket, geometric midpoints) for the largest
/// fixed dt that integrates stably to T.
inline StableDtScan max_stable_dt_scan(const FluidState1D& initial, const EquationOfState& eos,
                                       const SchemeParams& params, const Stepper1D& stepper,
                                       double T, double dt_lo, double dt_hi) {
  if (!(dt_lo > 0.0 && dt_lo < dt_hi)) throw InvalidStateError("scan requires 0 < dt_lo < dt_hi");
  StableDtScan out;
  auto hi = stable_run(initial, eos, params, stepper, T, dt_hi);
  ++out.runs;
  if (hi) return {dt_hi, *hi, out.runs};
  auto lo = stable_run(initial, eos, params, stepper, T, dt_lo);
  ++out.runs;
  if (!lo)
    throw NumericalFailure(FailureKind::NoStableTimeStep,
                           "lower end of the dt bracket " + std::to_string(dt_lo) + " is unstable");
  double a = dt_lo, b = dt_hi, speed = *lo;
  for (int k = 0; k < 12; ++k) {
    const double mid = std::sqrt(a * b);
    auto r = stable_run(initial, eos, params, stepper, T, mid);
    ++out.runs;
    if (r) {
      a = mid;
      speed = *r;
    } else {
      b = mid;
    }
  }
  out.dt = a;
  out.max_wave_speed = speed;
  return out;
}

} // namespace allspeed
