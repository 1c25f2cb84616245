#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "itrack/aggregation.hpp"
#include "itrack/control.hpp"
#include "itrack/dynamics.hpp"
#include "itrack/errors.hpp"
#include "itrack/estimator.hpp"
#include "itrack/scheduler.hpp"
#include "itrack/signals.hpp"

namespace itrack {

/// Which regressor-memory pipeline feeds the adaptation law.
enum class Variant {
  ConcurrentLearning,    // windowed pairs -> history stack
  ExponentialWeighting,  // windowed pairs -> forgetting-factor integrals
  ExponentialFilter,     // convolution-filtered pairs -> history stack
};

struct MreConfig {
  Variant variant = Variant::ConcurrentLearning;
  FilterConfig filter;
  int stack_capacity = 20;
  double lambda_admit = 0.04;
  double ew_alpha = 0.1;
};

struct EngineConfig {
  double h = 1e-3;
  double t_end = 9.0;
  int record_stride = 10;   // steps between records / scheduling decisions
  std::uint64_t seed = 1;
  /// Multiplies every commanded denied budget; values > 1 deliberately exceed
  /// the certificate and must be caught by the safety monitor.
  double denied_budget_scale = 1.0;
  /// Minimum assigned feedback-available duration: every available interval
  /// must leave room for the excitation time to re-occur after the per-
  /// interval identification reset, or the error bound (and with it the next
  /// denied budget) cannot improve.
  double available_floor = 1.5;
  Eigen::VectorXd x0;     // empty -> benchmark default [-1, 1]
  Eigen::VectorXd xhat0;  // empty -> zeros

  void validate() const;
};

struct TraceRecord {
  double t;
  Eigen::VectorXd x, xhat, xd, u, theta_hat, theta_tilde, e1, e2;
  double V;
  PhaseKind phase;
  int sigma;
};

/// End-of-interval snapshot of the aggregated information system, for
/// excitation diagnostics and identity checks.
struct AggSnapshot {
  int sigma = 0;
  double t = 0.0;
  Eigen::VectorXd U;          // p
  Eigen::MatrixXd Y;          // p x p
  double lambda_min = 0.0;
  std::optional<double> excitation_time;  // T within the interval, if reached
};

struct SimTrace {
  std::vector<TraceRecord> records;
  std::vector<SwitchRecord> switches;
  /// Certified max dwell recorded at each denied entry, by interval index.
  std::vector<std::pair<int, double>> denied_budgets;
  std::vector<AggSnapshot> agg_at_interval_end;
  ThetaBoundTracker bound;
  double max_V = 0.0;
  int completed_denied = 0;
  Eigen::VectorXd final_x, final_xhat, final_theta_hat;
  double final_theta_err = 0.0;
};

/// Classical fixed-step RK4 update. Any non-finite state or stage value (or a
/// rate-evaluation failure caused by one) is reported as NumericalBlowup at t.
template <class F>
Eigen::VectorXd rk4_step(F&& rate, double t, const Eigen::VectorXd& y, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidInput("rk4_step: h must be finite and > 0");
  }
  if (!y.allFinite()) {
    throw NumericalBlowup("rk4_step: non-finite state", t);
  }
  auto eval = [&](double ts, const Eigen::VectorXd& ys) -> Eigen::VectorXd {
    Eigen::VectorXd k;
    try {
      k = rate(ts, ys);
    } catch (const InvalidInput& e) {
      throw NumericalBlowup(std::string("rk4_step: stage failed: ") + e.what(), t);
    }
    if (!k.allFinite()) {
      throw NumericalBlowup("rk4_step: non-finite stage", t);
    }
    return k;
  };
  const Eigen::VectorXd k1 = eval(t, y);
  const Eigen::VectorXd k2 = eval(t + 0.5 * h, y + 0.5 * h * k1);
  const Eigen::VectorXd k3 = eval(t + 0.5 * h, y + 0.5 * h * k2);
  const Eigen::VectorXd k4 = eval(t + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Couples plant, observer, estimator, regressor memory and the dwell-time
/// scheduler into one deterministic fixed-step run.
class Simulator {
 public:
  Simulator(const SystemModel& model, const DesiredTrajectory& traj,
            EstimatorConfig est, GainSet gains, AnalysisConstants consts,
            EngineConfig eng, MreConfig mre, DisturbanceGenerator dist);

  SimTrace run();

 private:
  const SystemModel& model_;
  const DesiredTrajectory& traj_;
  EstimatorConfig est_;
  GainSet gains_;
  AnalysisConstants consts_;
  EngineConfig eng_;
  MreConfig mre_;
  DisturbanceGenerator dist_;
};

}  // namespace itrack
