#pragma once

#include <optional>

#include "itrack/errors.hpp"
#include "itrack/types.hpp"

namespace itrack {

/// Constants feeding the dwell-time formulas. The contraction/growth rates can
/// either be derived from the Lipschitz data (L1 = L_f + L_Y * theta_bound,
/// ku = min(3 L1 / 2, k2_min)) or supplied directly as analysis gains
/// (L1_gain / ku_gain) — the stability argument treats them as user-selected,
/// and the derived values are far too conservative to allow multi-second
/// open-loop intervals on the benchmark.
struct AnalysisConstants {
  double L_f = 1.0;
  double L_Y = 0.0;
  double Y_bar = 0.0;
  double d_bar = 1.5;
  double k1_min = 5.0;  // smallest eigenvalue of k1's symmetric part
  double k2_min = 10.0;
  double V_l = 0.05;
  double V_u = 4.0;
  double eta = 3.0;
  std::optional<double> L1_gain;  // analysis override for L1
  std::optional<double> ku_gain;  // analysis override for ku

  void validate() const;

  double k_lower_1() const { return k1_min - L_f; }
  double k_lower_2() const { return k2_min; }
  /// Contraction rate while feedback is available.
  double k_available() const;
  /// Error-growth Lipschitz rate while denied, for the given parameter bound.
  double L1(double theta_bound) const;
  /// Denied-phase rate constant.
  double k_unavailable(double theta_bound) const;
};

/// Time for the decay envelope V0 * e^{-k_available * t} to reach V_l
/// (never negative).
double min_available_dwell(double V_at_start, const AnalysisConstants& consts);

/// Largest certified open-loop duration starting from V_at_switch with the
/// given parameter-error bound:
///   (1/ku) * ln((V_u + c) / (V + c)),  c = (d_bar + Y_bar*theta_bound)^2 /
///                                          (2 * L1 * ku).
/// Throws InfeasibleStart when V_at_switch already exceeds V_u.
double max_denied_dwell(double V_at_switch, double theta_bound,
                        const AnalysisConstants& consts);

struct Phase {
  PhaseKind kind = PhaseKind::Available;
  int sigma = 0;       // interval index; increments on Denied -> Available
  double t_start = 0.0;
  double budget = 0.0;  // min dwell if Available, max dwell if Denied
};

struct SwitchRecord {
  int sigma;
  PhaseKind kind;  // phase being entered
  double t;
  double V;
  double theta_bound;
  double budget;
};

/// Pure phase-machine step: switches exactly when the elapsed time meets the
/// budget, computing the next budget from the dwell formulas (no floors or
/// stress scaling — callers layer policy on top of the returned budget).
Phase advance_phase(const Phase& phase, double t, double V_now,
                    double theta_bound, const AnalysisConstants& consts);

}  // namespace itrack
