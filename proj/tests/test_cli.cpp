#include <doctest.h>

#include <sys/wait.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "itrack/errors.hpp"
#include "itrack/scenario.hpp"

using namespace itrack;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Scenario defaults() { return parse_scenario(json::object()); }

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "itrack-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  REQUIRE(out.good());
  out << text;
}

/// Runs the installed CLI binary and returns its exit status (-1 if the
/// process did not terminate normally). Output is suppressed.
int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(ITRACK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

}  // namespace

// ---- JSON round trip ----------------------------------------------------------

TEST_CASE("scenario serialization round-trips losslessly") {
  const Scenario base;
  const json doc = serialize_scenario(base);
  const Scenario back = parse_scenario(doc);
  CHECK(serialize_scenario(back) == doc);

  // Defaults from an empty document match the struct defaults.
  const json empty_doc = serialize_scenario(defaults());
  CHECK(empty_doc == doc);
}

TEST_CASE("an empty document yields the stock scenario") {
  const Scenario s = defaults();
  CHECK(s.variant == "expfilter");
  CHECK(s.lambda_y == 0.15);
  CHECK(s.k_theta == 5.0);
  CHECK(s.N == 20);
  REQUIRE(s.L1_gain.has_value());
  CHECK(*s.L1_gain == 48.6);
  REQUIRE(s.ku_gain.has_value());
  CHECK(*s.ku_gain == 0.2573);
  CHECK(s.seed == 1);
  CHECK(s.t_end == 9.0);
  CHECK(s.out_dir == "out");
  CHECK(s.x0.isApprox(vec2(-1.0, 1.0)));
}

TEST_CASE("unknown keys are reported with their dotted path") {
  json doc = json::object();
  doc["estimator"]["bogus"] = 1.0;
  CHECK_THROWS_WITH_AS(parse_scenario(doc), "estimator.bogus: unknown key",
                       ConfigError);

  json top = json::object();
  top["bogus"] = json::object();
  CHECK_THROWS_WITH_AS(parse_scenario(top), "bogus: unknown key", ConfigError);

  CHECK_THROWS_AS(parse_scenario(json::array()), ConfigError);
}

TEST_CASE("type mismatches name the field and the expected type") {
  json doc = json::object();
  doc["estimator"]["k_theta"] = "fast";
  CHECK_THROWS_WITH_AS(parse_scenario(doc),
                       "estimator.k_theta: expected a number", ConfigError);

  json stride = json::object();
  stride["engine"]["record_stride"] = 2.5;
  CHECK_THROWS_WITH_AS(parse_scenario(stride),
                       "engine.record_stride: expected an integer",
                       ConfigError);

  json seed = json::object();
  seed["engine"]["seed"] = -1;
  CHECK_THROWS_WITH_AS(parse_scenario(seed),
                       "engine.seed: expected a nonnegative integer",
                       ConfigError);

  json sign = json::object();
  sign["gains"]["pure_sign"] = 1;
  CHECK_THROWS_WITH_AS(parse_scenario(sign),
                       "gains.pure_sign: expected a boolean", ConfigError);

  json x0 = json::object();
  x0["engine"]["x0"] = "zero";
  CHECK_THROWS_WITH_AS(parse_scenario(x0),
                       "engine.x0: expected an array of numbers", ConfigError);

  json mt = json::object();
  mt["model"]["type"] = 7;
  CHECK_THROWS_WITH_AS(parse_scenario(mt), "model.type: expected a string",
                       ConfigError);
}

TEST_CASE("optional rate overrides accept null and survive a round trip") {
  json doc = json::object();
  doc["scheduler"]["L1_gain"] = nullptr;
  doc["scheduler"]["ku_gain"] = 0.5;
  const Scenario s = parse_scenario(doc);
  CHECK(!s.L1_gain.has_value());
  REQUIRE(s.ku_gain.has_value());
  CHECK(*s.ku_gain == 0.5);

  const json out = serialize_scenario(s);
  CHECK(out["scheduler"]["L1_gain"].is_null());
  CHECK(out["scheduler"]["ku_gain"] == 0.5);
  const Scenario back = parse_scenario(out);
  CHECK(!back.L1_gain.has_value());
  CHECK(serialize_scenario(back) == out);
}

// ---- build-time validation ------------------------------------------------------

TEST_CASE("assembly rejects gain and envelope settings that void the analysis") {
  Scenario weak = defaults();
  weak.k1_diag = vec2(0.5, 0.5);  // below the model Lipschitz constant
  CHECK_THROWS_WITH_AS(build(weak),
                       "AnalysisConstants: lambda_min(k1) must exceed L_f",
                       InvalidInput);

  Scenario ceiling = defaults();
  ceiling.V_u = 5.0;  // ceiling no longer keeps the state inside the eta-ball
  CHECK_THROWS_WITH_AS(build(ceiling),
                       "AnalysisConstants: V_u < eta^2/2 is required",
                       InvalidInput);

  Scenario variant = defaults();
  variant.variant = "bogus";
  CHECK_THROWS_AS(build(variant), ConfigError);
}

// ---- CSV shape -------------------------------------------------------------------

TEST_CASE("csv headers are a stable contract") {
  SimTrace empty;
  {
    std::ostringstream os;
    write_trace_csv(os, empty, 2, 2);
    CHECK(os.str() ==
          "t,x1,x2,xhat1,xhat2,xd1,xd2,u1,u2,thetahat1,thetahat2,"
          "thetatilde1,thetatilde2,e1_1,e1_2,e2_1,e2_2,V,phase,sigma\n");
  }
  {
    std::ostringstream os;
    write_switches_csv(os, empty);
    CHECK(os.str() == "sigma,kind,t,V,theta_bound,budget\n");
  }
  {
    std::ostringstream os;
    write_dwell_csv(os, empty);
    CHECK(os.str() == "sigma,denied_budget\n");
  }
  {
    std::ostringstream os;
    write_sweep_csv(os, {});
    CHECK(os.str() ==
          "param,value,final_theta_err,completed_denied,mean_denied_budget,"
          "max_denied_budget,max_V\n");
  }
}

TEST_CASE("a zero-length run writes header-only files") {
  const fs::path dir = fresh_dir("zero-length");
  Scenario s = defaults();
  s.t_end = 0.0;
  s.out_dir = (dir / "out").string();
  const RunSummary sum = run_scenario(s);
  CHECK(sum.completed_denied == 0);
  CHECK(sum.final_theta_err == doctest::Approx(std::sqrt(1.25)).epsilon(1e-14));
  CHECK(sum.max_V == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(sum.mean_denied_budget == 0.0);

  const std::string trace = slurp(fs::path(s.out_dir) / "trace.csv");
  CHECK(trace ==
        "t,x1,x2,xhat1,xhat2,xd1,xd2,u1,u2,thetahat1,thetahat2,"
        "thetatilde1,thetatilde2,e1_1,e1_2,e2_1,e2_2,V,phase,sigma\n");
  CHECK(slurp(fs::path(s.out_dir) / "switches.csv") ==
        "sigma,kind,t,V,theta_bound,budget\n");
  CHECK(slurp(fs::path(s.out_dir) / "dwell.csv") == "sigma,denied_budget\n");
}

TEST_CASE("run outputs use the documented vocabulary") {
  const fs::path dir = fresh_dir("vocabulary");
  Scenario s = defaults();
  s.t_end = 3.0;
  s.out_dir = (dir / "out").string();
  run_scenario(s);
  const std::string switches = slurp(fs::path(s.out_dir) / "switches.csv");
  CHECK(switches.find("available") != std::string::npos);
  CHECK(switches.find("denied") != std::string::npos);
  const std::string trace = slurp(fs::path(s.out_dir) / "trace.csv");
  CHECK(trace.find(",available,") != std::string::npos);
  CHECK(trace.find(",denied,") != std::string::npos);
  // One dwell row: the first denied interval was entered within 3 s.
  const std::string dwell = slurp(fs::path(s.out_dir) / "dwell.csv");
  CHECK(dwell.rfind("sigma,denied_budget\n0,", 0) == 0);
}

// ---- sweeps ----------------------------------------------------------------------

TEST_CASE("disturbance sweeps show certified budgets shrinking with d_bar") {
  Scenario base = defaults();
  base.t_end = 3.0;
  const auto rows = run_sweep(base, "d_bar", {0.0, 0.75, 1.5});
  REQUIRE(rows.size() == 3);
  for (const SweepRow& r : rows) {
    CHECK(r.param == "d_bar");
    CHECK(r.summary.max_denied_budget > 0.0);
    CHECK(r.summary.max_V <= 4.0 * 1.001);
  }
  CHECK(rows[0].summary.max_denied_budget > rows[1].summary.max_denied_budget);
  CHECK(rows[1].summary.max_denied_budget > rows[2].summary.max_denied_budget);
}

TEST_CASE("ceiling sweeps show certified budgets growing with V_u") {
  Scenario base = defaults();
  base.t_end = 3.0;
  base.x0 = vec2(-0.5, 1.5);  // keep the start feasible for the low ceiling
  base.xhat0 = vec2(0.0, 2.0);
  const auto rows = run_sweep(base, "V_u", {2.0, 4.0});
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].summary.max_denied_budget <
        rows[1].summary.max_denied_budget);
  CHECK(rows[0].summary.max_V <= 2.0 * 1.001);
  CHECK(rows[1].summary.max_V <= 4.0 * 1.001);
}

TEST_CASE("a one-point sweep equals the plain run") {
  Scenario base = defaults();
  base.t_end = 3.0;
  const auto rows = run_sweep(base, "d_bar", {1.5});
  REQUIRE(rows.size() == 1);
  const BuiltScenario b = build(base);
  const RunSummary direct = summarize(b.make_simulator().run());
  CHECK(rows[0].summary.final_theta_err == direct.final_theta_err);
  CHECK(rows[0].summary.completed_denied == direct.completed_denied);
  CHECK(rows[0].summary.mean_denied_budget == direct.mean_denied_budget);
  CHECK(rows[0].summary.max_denied_budget == direct.max_denied_budget);
  CHECK(rows[0].summary.max_V == direct.max_V);
}

TEST_CASE("sweep input validation") {
  const Scenario base = defaults();
  CHECK_THROWS_WITH_AS(run_sweep(base, "epsilon", {0.1}),
                       "sweep.param: unknown sweep parameter 'epsilon' "
                       "(expected d_bar | k_theta | N | lambda_admit | V_u)",
                       ConfigError);
  CHECK_THROWS_WITH_AS(run_sweep(base, "N", {2.5}),
                       "sweep.values: N sweep values must be positive integers",
                       ConfigError);
  CHECK_THROWS_WITH_AS(run_sweep(base, "d_bar", {}),
                       "sweep.values: sweep needs at least one value",
                       ConfigError);
}

// ---- the installed binary ---------------------------------------------------------

TEST_CASE("cli exit codes map the error taxonomy") {
  const fs::path dir = fresh_dir("cli-exit-codes");

  // Clean run.
  json ok = json::object();
  ok["engine"]["t_end"] = 1.0;
  ok["outputs"]["directory"] = (dir / "ok").string();
  write_file(dir / "ok.json", ok.dump());
  CHECK(run_cli("run " + (dir / "ok.json").string()) == 0);
  CHECK(fs::exists(dir / "ok" / "trace.csv"));
  CHECK(fs::exists(dir / "ok" / "switches.csv"));
  CHECK(fs::exists(dir / "ok" / "dwell.csv"));

  // Missing scenario file.
  CHECK(run_cli("run " + (dir / "absent.json").string()) == 1);

  // Unknown key in the scenario document.
  write_file(dir / "unknown.json", R"({"estimator": {"bogus": 1}})");
  CHECK(run_cli("run " + (dir / "unknown.json").string()) == 1);

  // Malformed JSON.
  write_file(dir / "broken.json", "{");
  CHECK(run_cli("run " + (dir / "broken.json").string()) == 1);

  // Commanding more open-loop time than certified trips the safety monitor.
  json unsafe = json::object();
  unsafe["engine"]["t_end"] = 2.5;
  unsafe["engine"]["denied_budget_scale"] = 1.5;
  unsafe["outputs"]["directory"] = (dir / "unsafe").string();
  write_file(dir / "unsafe.json", unsafe.dump());
  CHECK(run_cli("run " + (dir / "unsafe.json").string()) == 3);

  // An infeasible initial condition is also a safety refusal.
  json infeasible = json::object();
  infeasible["engine"]["x0"] = {-3.0, 3.0};
  infeasible["engine"]["t_end"] = 1.0;
  infeasible["outputs"]["directory"] = (dir / "infeasible").string();
  write_file(dir / "infeasible.json", infeasible.dump());
  CHECK(run_cli("run " + (dir / "infeasible.json").string()) == 3);

  // A state far outside the envelope overflows the very first integration
  // stage (cubic regressor), which is a numerical failure, not a safety stop.
  json blowup = json::object();
  blowup["engine"]["x0"] = {1e150, 0.0};
  blowup["engine"]["t_end"] = 1.0;
  blowup["scheduler"]["V_u"] = 1e300;
  blowup["scheduler"]["eta"] = 1e151;
  blowup["outputs"]["directory"] = (dir / "blowup").string();
  write_file(dir / "blowup.json", blowup.dump());
  CHECK(run_cli("run " + (dir / "blowup.json").string()) == 2);

  // Bad flag value is a usage error.
  CHECK(run_cli("run " + (dir / "ok.json").string() + " --variant bogus") == 1);
}

TEST_CASE("cli overrides reach the engine") {
  const fs::path dir = fresh_dir("cli-overrides");
  json cfg = json::object();
  cfg["engine"]["t_end"] = 3.0;
  write_file(dir / "cfg.json", cfg.dump());

  auto run_into = [&](const std::string& sub, const std::string& flags) {
    const std::string out = (dir / sub).string();
    REQUIRE(run_cli("run " + (dir / "cfg.json").string() + " --out " + out +
                    " " + flags) == 0);
    return slurp(fs::path(out) / "trace.csv");
  };

  const std::string seed1a = run_into("seed1a", "--seed 1");
  const std::string seed1b = run_into("seed1b", "--seed 1");
  const std::string seed2 = run_into("seed2", "--seed 2");
  CHECK(seed1a == seed1b);  // determinism through the binary
  CHECK(seed1a != seed2);   // the seed override is live

  const std::string filt = run_into("filt", "--variant expfilter");
  const std::string cl = run_into("cl", "--variant cl");
  CHECK(filt != cl);  // the memory-variant override changes the estimate path
  CHECK(filt == seed1a);  // default seed and variant match the explicit ones

  // The sweep subcommand writes sweep.csv with one row per value.
  const std::string sweep_out = (dir / "sweep").string();
  REQUIRE(run_cli("sweep " + (dir / "cfg.json").string() + " --out " +
                  sweep_out + " --param d_bar --values 0,1.5") == 0);
  const std::string sweep = slurp(fs::path(sweep_out) / "sweep.csv");
  CHECK(sweep.rfind("param,value,final_theta_err,", 0) == 0);
  CHECK(sweep.find("\nd_bar,0,") != std::string::npos);
  CHECK(sweep.find("\nd_bar,1.5,") != std::string::npos);

  // Unknown sweep parameter maps to a config failure.
  CHECK(run_cli("sweep " + (dir / "cfg.json").string() + " --out " +
                sweep_out + " --param epsilon --values 0.1") == 1);
}
