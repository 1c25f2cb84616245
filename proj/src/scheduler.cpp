#include "itrack/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace itrack {

void AnalysisConstants::validate() const {
  if (!(L_f >= 0.0) || !(L_Y >= 0.0) || !(Y_bar >= 0.0) || !(d_bar >= 0.0)) {
    throw InvalidInput("AnalysisConstants: Lipschitz data must be >= 0");
  }
  if (!(k1_min > L_f)) {
    throw InvalidInput("AnalysisConstants: lambda_min(k1) must exceed L_f");
  }
  if (!(k2_min > 0.0)) {
    throw InvalidInput("AnalysisConstants: lambda_min(k2) must be > 0");
  }
  if (!(V_l > 0.0) || !(V_u > V_l)) {
    throw InvalidInput("AnalysisConstants: need 0 < V_l < V_u");
  }
  if (!(eta > 0.0) || !(V_u < 0.5 * eta * eta)) {
    throw InvalidInput("AnalysisConstants: V_u < eta^2/2 is required");
  }
  if (L1_gain && !(*L1_gain > 0.0)) {
    throw InvalidInput("AnalysisConstants: L1_gain must be > 0");
  }
  if (ku_gain && !(*ku_gain > 0.0)) {
    throw InvalidInput("AnalysisConstants: ku_gain must be > 0");
  }
}

double AnalysisConstants::k_available() const {
  return std::min(k_lower_1() / 2.0, k_lower_2() / 2.0);
}

double AnalysisConstants::L1(double theta_bound) const {
  if (L1_gain) return *L1_gain;
  return L_f + L_Y * theta_bound;
}

double AnalysisConstants::k_unavailable(double theta_bound) const {
  if (ku_gain) return *ku_gain;
  return std::min(1.5 * L1(theta_bound), k_lower_2());
}

double min_available_dwell(double V_at_start, const AnalysisConstants& consts) {
  if (!(V_at_start > 0.0) || !std::isfinite(V_at_start)) {
    throw InvalidInput("min_available_dwell: V must be finite and > 0");
  }
  const double ka = consts.k_available();
  if (!(ka > 0.0)) {
    throw InvalidInput("min_available_dwell: contraction rate must be > 0");
  }
  return std::max(0.0, std::log(V_at_start / consts.V_l) / ka);
}

double max_denied_dwell(double V_at_switch, double theta_bound,
                        const AnalysisConstants& consts) {
  if (!(V_at_switch >= 0.0) || !std::isfinite(V_at_switch)) {
    throw InvalidInput("max_denied_dwell: V must be finite and >= 0");
  }
  if (!(theta_bound >= 0.0)) {
    throw InvalidInput("max_denied_dwell: theta_bound must be >= 0");
  }
  if (V_at_switch > consts.V_u) {
    throw InfeasibleStart(
        "max_denied_dwell: V already exceeds V_u at the switch (V=" +
        std::to_string(V_at_switch) + ", V_u=" + std::to_string(consts.V_u) +
        ")");
  }
  const double L1 = consts.L1(theta_bound);
  const double ku = consts.k_unavailable(theta_bound);
  if (!(L1 > 0.0) || !(ku > 0.0)) {
    throw InvalidInput("max_denied_dwell: rates must be > 0");
  }
  const double g = consts.d_bar + consts.Y_bar * theta_bound;
  const double c = g * g / (2.0 * L1 * ku);
  const double denom = V_at_switch + c;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log((consts.V_u + c) / denom) / ku;
}

Phase advance_phase(const Phase& phase, double t, double V_now,
                    double theta_bound, const AnalysisConstants& consts) {
  if (t < phase.t_start) {
    throw InvalidInput("advance_phase: t precedes the phase start");
  }
  if (t - phase.t_start < phase.budget) return phase;
  Phase next;
  next.t_start = t;
  if (phase.kind == PhaseKind::Available) {
    next.kind = PhaseKind::Denied;
    next.sigma = phase.sigma;
    next.budget = max_denied_dwell(V_now, theta_bound, consts);
  } else {
    next.kind = PhaseKind::Available;
    next.sigma = phase.sigma + 1;
    next.budget = min_available_dwell(V_now, consts);
  }
  return next;
}

}  // namespace itrack
