#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace allspeed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A state, grid or argument that violates a domain invariant
/// (non-positive density, odd grid for a stride-2 stencil, ...).
class InvalidStateError : public Error {
public:
  using Error::Error;
};

class UnsupportedGridError : public Error {
public:
  using Error::Error;
};

class IncompatibleGridsError : public Error {
public:
  using Error::Error;
};

/// Failure modes of a time step or of a linear/nonlinear solve.
enum class FailureKind {
  PositivityLoss,
  NonFinite,
  Blowup,
  SingularSystem,
  NewtonDivergence,
  SolverFailure,
  NoStableTimeStep,
};

inline const char* to_string(FailureKind k) {
  switch (k) {
  case FailureKind::PositivityLoss: return "positivity-loss";
  case FailureKind::NonFinite: return "non-finite";
  case FailureKind::Blowup: return "blow-up";
  case FailureKind::SingularSystem: return "singular-system";
  case FailureKind::NewtonDivergence: return "newton-divergence";
  case FailureKind::SolverFailure: return "solver-failure";
  case FailureKind::NoStableTimeStep: return "no-stable-dt";
  }
  return "unknown";
}

/// Numerical failure. Carries the offending cell index when one exists and
/// the step number when raised from inside a time loop.
class NumericalFailure : public Error {
public:
  NumericalFailure(FailureKind kind, const std::string& what,
                   std::optional<std::size_t> cell = std::nullopt,
                   std::optional<std::size_t> step = std::nullopt)
      : Error(compose(kind, what, cell, step)), kind_(kind), cell_(cell),
        step_(step), detail_(what) {}

  FailureKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> cell() const noexcept { return cell_; }
  std::optional<std::size_t> step() const noexcept { return step_; }
  const std::string& detail() const noexcept { return detail_; }

  NumericalFailure at_step(std::size_t step) const {
    return NumericalFailure(kind_, detail_, cell_, step);
  }

private:
  static std::string compose(FailureKind kind, const std::string& what,
                             std::optional<std::size_t> cell,
                             std::optional<std::size_t> step) {
    std::string s = std::string(to_string(kind)) + ": " + what;
    if (cell) s += " (cell " + std::to_string(*cell) + ")";
    if (step) s += " (step " + std::to_string(*step) + ")";
    return s;
  }

  FailureKind kind_;
  std::optional<std::size_t> cell_;
  std::optional<std::size_t> step_;
  std::string detail_;
};

} // namespace allspeed
