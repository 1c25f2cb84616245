#pragma once

#include <string>

namespace itrack {

/// Feedback availability. Available: full state measurement, innovation
/// feedback and parameter adaptation run. Denied: the plant state is not
/// measurable; observer and controller run open loop on the model.
enum class PhaseKind { Available, Denied };

inline const char* to_string(PhaseKind k) {
  return k == PhaseKind::Available ? "available" : "denied";
}

}  // namespace itrack
