#pragma once

#include <stdexcept>
#include <string>

namespace fracldp {

/// Bad arguments: degenerate grids, out-of-range parameters, shape mismatches.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerics themselves (exit code 3 in the CLI).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A singular fractional integral did not converge on the grid interpolant.
class RegularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A matrix that must be invertible (σ̄1, QQᵀ-bar, τ²) is singular within tolerance.
class DegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IllConditionedError : public NumericalError {
 public:
  IllConditionedError(const std::string& what, double cond)
      : NumericalError(what), condition(cond) {}
  double condition;
};

/// Invariant density has non-negligible mass at the edge of the truncated domain.
class TruncationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Centering ∫ b dμ = 0 fails; carries the offending average.
class CenteringError : public NumericalError {
 public:
  CenteringError(const std::string& what, double avg)
      : NumericalError(what), average(avg) {}
  double average;
};

/// Trajectory blow-up; `time` is the first grid time with a non-finite state.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double t)
      : NumericalError(what), time(t) {}
  double time;
};

/// Path fails the near-origin admissibility check of the limit study.
class AdmissibilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ExperimentError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Configuration parse or validation failure (exit code 2 in the CLI).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracldp
