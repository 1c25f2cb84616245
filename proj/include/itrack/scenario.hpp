#pragma once

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "itrack/engine.hpp"

namespace itrack {

/// Flat, serializable description of one simulation scenario. Mirrors the
/// JSON schema one-to-one (see README for the full field list); build()
/// turns it into validated component configs.
struct Scenario {
  // --- model ---
  std::string model_type = "benchmark";
  Eigen::VectorXd theta_true = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
  double d_bar = 1.5;
  double hold_step = 1e-3;

  // --- gains ---
  Eigen::VectorXd k1_diag = (Eigen::VectorXd(2) << 5.0, 5.0).finished();
  Eigen::VectorXd k2_diag = (Eigen::VectorXd(2) << 10.0, 10.0).finished();
  double epsilon = 0.05;
  bool pure_sign = false;

  // --- estimator ---
  Eigen::VectorXd Gamma_diag = (Eigen::VectorXd(2) << 4.0, 4.0).finished();
  double k_theta = 5.0;
  int N = 20;
  double lambda_admit = 0.04;
  double window = 0.25;
  std::string variant = "expfilter";  // cl | ew | expfilter
  double theta_bar = 1.2;
  double k_xi = 0.05;
  double lambda_y = 0.15;
  double beta = 5.0;
  double alpha = 0.1;

  // --- scheduler ---
  double V_l = 0.05;
  double V_u = 4.0;
  double eta = 3.0;
  double box_halfwidth = 2.0;
  std::optional<double> L1_gain = 48.6;
  std::optional<double> ku_gain = 0.2573;
  double available_floor = 1.5;

  // --- engine ---
  double h = 1e-3;
  double t_end = 9.0;
  int record_stride = 10;
  std::uint64_t seed = 1;
  double denied_budget_scale = 1.0;
  Eigen::VectorXd x0 = (Eigen::VectorXd(2) << -1.0, 1.0).finished();
  Eigen::VectorXd xhat0 = Eigen::VectorXd::Zero(2);

  // --- outputs ---
  std::string out_dir = "out";
};

/// Parses a scenario document. Missing fields keep their defaults; unknown
/// keys (at any level) and type mismatches raise ConfigError naming the field.
Scenario parse_scenario(const nlohmann::json& doc);

/// Reads and parses a JSON scenario file.
Scenario load_scenario_file(const std::string& path);

nlohmann::json serialize_scenario(const Scenario& s);

/// Everything needed to construct a Simulator; owns the model/trajectory.
struct BuiltScenario {
  std::unique_ptr<SystemModel> model;
  std::unique_ptr<DesiredTrajectory> trajectory;
  EstimatorConfig estimator;
  GainSet gains;
  AnalysisConstants consts;
  EngineConfig engine;
  MreConfig mre;
  DisturbanceGenerator disturbance;

  Simulator make_simulator() const;
};

/// Validates the scenario and assembles component configs, deriving the
/// Lipschitz data (L_f, L_Y, Y_bar) from the model over the configured box.
/// Violated constraints raise ConfigError naming the inequality.
BuiltScenario build(const Scenario& s);

struct RunSummary {
  double final_theta_err = 0.0;
  int completed_denied = 0;
  double mean_denied_budget = 0.0;
  double max_denied_budget = 0.0;
  double max_V = 0.0;
};

RunSummary summarize(const SimTrace& trace);

/// Runs the scenario and writes trace.csv / switches.csv / dwell.csv into
/// s.out_dir (created if needed). t_end = 0 produces header-only files.
RunSummary run_scenario(const Scenario& s);

// CSV emission (headers are a stable contract; values use %.17g).
void write_trace_csv(std::ostream& os, const SimTrace& trace, int n, int p);
void write_switches_csv(std::ostream& os, const SimTrace& trace);
void write_dwell_csv(std::ostream& os, const SimTrace& trace);

struct SweepRow {
  std::string param;
  double value = 0.0;
  RunSummary summary;
};

/// Re-runs the scenario once per value of the named parameter
/// (d_bar | k_theta | N | lambda_admit | V_u), sequentially and with
/// independent state. No per-run files are written.
std::vector<SweepRow> run_sweep(const Scenario& base, const std::string& param,
                                const std::vector<double>& values);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace itrack
