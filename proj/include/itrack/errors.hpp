#pragma once

#include <stdexcept>
#include <string>

namespace itrack {

/// Base class for all library errors. The CLI maps subclasses to exit codes:
/// ConfigError -> 1, NumericalBlowup -> 2, SafetyViolation/InfeasibleStart -> 3,
/// everything else -> 1.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad argument to a library call (non-finite input, dimension mismatch,
/// out-of-domain value).
struct InvalidInput : SimError {
  using SimError::SimError;
};

/// Samples pushed with non-increasing timestamps.
struct OrderingError : SimError {
  using SimError::SimError;
};

/// A filtered-signal query needs data outside the retained buffer span.
struct NotWarmError : SimError {
  using SimError::SimError;
};

/// Operation invoked in the wrong phase (e.g. innovation feedback while the
/// state measurement is unavailable), or a phase/feedback-term mismatch.
struct PhaseError : SimError {
  using SimError::SimError;
};

/// Scenario-file / CLI configuration problem. `field` is a dotted path into
/// the offending entry when known.
struct ConfigError : SimError {
  explicit ConfigError(const std::string& msg, std::string field_path = "")
      : SimError(field_path.empty() ? msg : field_path + ": " + msg),
        field(std::move(field_path)) {}
  std::string field;
};

/// An integration stage produced a non-finite value at time t.
struct NumericalBlowup : SimError {
  NumericalBlowup(const std::string& msg, double t_at)
      : SimError(msg + " (t=" + std::to_string(t_at) + ")"), t(t_at) {}
  double t;
};

/// The runtime safety envelope was breached (Lyapunov ceiling exceeded, or a
/// commanded open-loop budget exceeds the certified maximum dwell).
struct SafetyViolation : SimError {
  SafetyViolation(const std::string& msg, double t_at)
      : SimError(msg + " (t=" + std::to_string(t_at) + ")"), t(t_at) {}
  double t;
};

/// An open-loop interval cannot be started safely (V already above the
/// ceiling at the switch instant).
struct InfeasibleStart : SimError {
  using SimError::SimError;
};

}  // namespace itrack
