#include "itrack/scenario.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace itrack {

namespace {

using nlohmann::json;

std::string path_join(const std::string& a, const std::string& b) {
  return a.empty() ? b : a + "." + b;
}

[[noreturn]] void bad_field(const std::string& path, const std::string& what) {
  throw ConfigError(what, path);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) bad_field(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) bad_field(path, "expected an integer");
  return j.get<int>();
}

std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    bad_field(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) bad_field(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) bad_field(path, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) bad_field(path, "expected an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) bad_field(path, "expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

const json& as_object(const json& j, const std::string& path) {
  if (!j.is_object()) bad_field(path, "expected an object");
  return j;
}

template <class Fn>
void parse_section(const json& doc, const std::string& section, Fn&& field) {
  auto it = doc.find(section);
  if (it == doc.end()) return;
  const json& obj = as_object(*it, section);
  for (const auto& [key, value] : obj.items()) {
    if (!field(key, value, path_join(section, key))) {
      bad_field(path_join(section, key), "unknown key");
    }
  }
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
  Scenario s;
  as_object(doc, "<root>");
  static const char* kSections[] = {"model",     "gains",  "estimator",
                                    "scheduler", "engine", "outputs"};
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* sec : kSections) known = known || key == sec;
    if (!known) bad_field(key, "unknown key");
    (void)value;
  }

  parse_section(doc, "model", [&](const std::string& k, const json& v,
                                  const std::string& p) {
    if (k == "type") s.model_type = as_string(v, p);
    else if (k == "theta_true") s.theta_true = as_vector(v, p);
    else if (k == "d_bar") s.d_bar = as_number(v, p);
    else if (k == "hold_step") s.hold_step = as_number(v, p);
    else return false;
    return true;
  });

  parse_section(doc, "gains", [&](const std::string& k, const json& v,
                                  const std::string& p) {
    if (k == "k1") s.k1_diag = as_vector(v, p);
    else if (k == "k2") s.k2_diag = as_vector(v, p);
    else if (k == "epsilon") s.epsilon = as_number(v, p);
    else if (k == "pure_sign") s.pure_sign = as_bool(v, p);
    else return false;
    return true;
  });

  parse_section(doc, "estimator", [&](const std::string& k, const json& v,
                                      const std::string& p) {
    if (k == "Gamma") s.Gamma_diag = as_vector(v, p);
    else if (k == "k_theta") s.k_theta = as_number(v, p);
    else if (k == "N") s.N = as_int(v, p);
    else if (k == "lambda_admit") s.lambda_admit = as_number(v, p);
    else if (k == "window") s.window = as_number(v, p);
    else if (k == "variant") s.variant = as_string(v, p);
    else if (k == "theta_bar") s.theta_bar = as_number(v, p);
    else if (k == "k_xi") s.k_xi = as_number(v, p);
    else if (k == "lambda_y") s.lambda_y = as_number(v, p);
    else if (k == "beta") s.beta = as_number(v, p);
    else if (k == "alpha") s.alpha = as_number(v, p);
    else return false;
    return true;
  });

  parse_section(doc, "scheduler", [&](const std::string& k, const json& v,
                                      const std::string& p) {
    if (k == "V_l") s.V_l = as_number(v, p);
    else if (k == "V_u") s.V_u = as_number(v, p);
    else if (k == "eta") s.eta = as_number(v, p);
    else if (k == "box_halfwidth") s.box_halfwidth = as_number(v, p);
    else if (k == "L1_gain") {
      if (v.is_null()) s.L1_gain.reset();
      else s.L1_gain = as_number(v, p);
    } else if (k == "ku_gain") {
      if (v.is_null()) s.ku_gain.reset();
      else s.ku_gain = as_number(v, p);
    } else if (k == "available_floor") s.available_floor = as_number(v, p);
    else return false;
    return true;
  });

  parse_section(doc, "engine", [&](const std::string& k, const json& v,
                                   const std::string& p) {
    if (k == "h") s.h = as_number(v, p);
    else if (k == "t_end") s.t_end = as_number(v, p);
    else if (k == "record_stride") s.record_stride = as_int(v, p);
    else if (k == "seed") s.seed = as_u64(v, p);
    else if (k == "denied_budget_scale") s.denied_budget_scale = as_number(v, p);
    else if (k == "x0") s.x0 = as_vector(v, p);
    else if (k == "xhat0") s.xhat0 = as_vector(v, p);
    else return false;
    return true;
  });

  parse_section(doc, "outputs", [&](const std::string& k, const json& v,
                                    const std::string& p) {
    if (k == "directory") s.out_dir = as_string(v, p);
    else return false;
    return true;
  });

  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

json serialize_scenario(const Scenario& s) {
  json doc;
  doc["model"] = {{"type", s.model_type},
                  {"theta_true", vec_to_json(s.theta_true)},
                  {"d_bar", s.d_bar},
                  {"hold_step", s.hold_step}};
  doc["gains"] = {{"k1", vec_to_json(s.k1_diag)},
                  {"k2", vec_to_json(s.k2_diag)},
                  {"epsilon", s.epsilon},
                  {"pure_sign", s.pure_sign}};
  doc["estimator"] = {{"Gamma", vec_to_json(s.Gamma_diag)},
                      {"k_theta", s.k_theta},
                      {"N", s.N},
                      {"lambda_admit", s.lambda_admit},
                      {"window", s.window},
                      {"variant", s.variant},
                      {"theta_bar", s.theta_bar},
                      {"k_xi", s.k_xi},
                      {"lambda_y", s.lambda_y},
                      {"beta", s.beta},
                      {"alpha", s.alpha}};
  doc["scheduler"] = {{"V_l", s.V_l},
                      {"V_u", s.V_u},
                      {"eta", s.eta},
                      {"box_halfwidth", s.box_halfwidth},
                      {"available_floor", s.available_floor}};
  if (s.L1_gain.has_value()) doc["scheduler"]["L1_gain"] = *s.L1_gain;
  else doc["scheduler"]["L1_gain"] = nullptr;
  if (s.ku_gain.has_value()) doc["scheduler"]["ku_gain"] = *s.ku_gain;
  else doc["scheduler"]["ku_gain"] = nullptr;
  doc["engine"] = {{"h", s.h},
                   {"t_end", s.t_end},
                   {"record_stride", s.record_stride},
                   {"seed", s.seed},
                   {"denied_budget_scale", s.denied_budget_scale},
                   {"x0", vec_to_json(s.x0)},
                   {"xhat0", vec_to_json(s.xhat0)}};
  doc["outputs"] = {{"directory", s.out_dir}};
  return doc;
}

Simulator BuiltScenario::make_simulator() const {
  return Simulator(*model, *trajectory, estimator, gains, consts, engine, mre,
                   disturbance);
}

BuiltScenario build(const Scenario& s) {
  BuiltScenario b;

  if (s.model_type != "benchmark") {
    throw ConfigError("unsupported model type '" + s.model_type +
                          "' (only 'benchmark' is implemented; its "
                          "coefficients theta_true/d_bar are configurable)",
                      "model.type");
  }
  if (!(s.d_bar >= 0.0) || !std::isfinite(s.d_bar)) {
    throw ConfigError("d_bar must be finite and >= 0", "model.d_bar");
  }
  if (!(s.hold_step > 0.0)) {
    throw ConfigError("hold_step must be > 0", "model.hold_step");
  }
  b.model = std::make_unique<BenchmarkModel>(s.theta_true, s.d_bar);
  b.trajectory = std::make_unique<SineTrajectory>(2.0);

  const int n = b.model->state_dim();
  const int p = b.model->param_dim();

  if (s.k1_diag.size() != n || s.k2_diag.size() != n) {
    throw ConfigError("gain diagonals must have one entry per state",
                      "gains.k1");
  }
  b.gains.k1 = s.k1_diag.asDiagonal();
  b.gains.k2 = s.k2_diag.asDiagonal();
  b.gains.boundary_layer = s.epsilon;
  b.gains.pure_sign = s.pure_sign;
  b.gains.validate();

  if (s.Gamma_diag.size() != p) {
    throw ConfigError("Gamma diagonal must have one entry per parameter",
                      "estimator.Gamma");
  }
  b.estimator.k_theta = s.k_theta;
  b.estimator.Gamma = s.Gamma_diag.asDiagonal();
  b.estimator.theta_hat0 = Eigen::VectorXd::Zero(p);
  b.estimator.theta_norm_bound = s.theta_bar;
  b.estimator.k_xi = s.k_xi;
  b.estimator.lambda_y = s.lambda_y;
  b.estimator.validate();
  if (!(s.k_theta > 0.0)) {
    throw ConfigError("k_theta must be > 0", "estimator.k_theta");
  }

  if (!(s.box_halfwidth > 0.0) || !std::isfinite(s.box_halfwidth)) {
    throw ConfigError("box_halfwidth must be finite and > 0",
                      "scheduler.box_halfwidth");
  }
  const LipschitzEstimates lip = lipschitz_bounds(*b.model, 0.0, s.box_halfwidth);
  b.consts.L_f = lip.L_f;
  b.consts.L_Y = lip.L_Y;
  b.consts.Y_bar = lip.Y_sup;
  b.consts.d_bar = s.d_bar;
  b.consts.k1_min = b.gains.k1_min();
  b.consts.k2_min = b.gains.k2_min();
  b.consts.V_l = s.V_l;
  b.consts.V_u = s.V_u;
  b.consts.eta = s.eta;
  b.consts.L1_gain = s.L1_gain;
  b.consts.ku_gain = s.ku_gain;
  b.consts.validate();

  b.engine.h = s.h;
  b.engine.t_end = s.t_end;
  b.engine.record_stride = s.record_stride;
  b.engine.seed = s.seed;
  b.engine.denied_budget_scale = s.denied_budget_scale;
  b.engine.available_floor = s.available_floor;
  if (s.x0.size() != n || s.xhat0.size() != n) {
    throw ConfigError("initial states must have one entry per state",
                      "engine.x0");
  }
  b.engine.x0 = s.x0;
  b.engine.xhat0 = s.xhat0;
  b.engine.validate();

  if (s.variant == "cl") {
    b.mre.variant = Variant::ConcurrentLearning;
    b.mre.filter.variant = FilterVariant::WindowedIntegration;
  } else if (s.variant == "ew") {
    b.mre.variant = Variant::ExponentialWeighting;
    b.mre.filter.variant = FilterVariant::WindowedIntegration;
  } else if (s.variant == "expfilter") {
    b.mre.variant = Variant::ExponentialFilter;
    b.mre.filter.variant = FilterVariant::ExponentialFilter;
  } else {
    throw ConfigError("variant must be one of cl | ew | expfilter",
                      "estimator.variant");
  }
  b.mre.filter.beta = s.beta;
  b.mre.filter.window = s.window;
  b.mre.filter.quadrature_step = s.h;
  b.mre.filter.validate();
  if (s.N < 1) throw ConfigError("N must be >= 1", "estimator.N");
  b.mre.stack_capacity = s.N;
  if (!(s.lambda_admit >= 0.0)) {
    throw ConfigError("lambda_admit must be >= 0", "estimator.lambda_admit");
  }
  b.mre.lambda_admit = s.lambda_admit;
  if (!(s.alpha >= 0.0)) {
    throw ConfigError("alpha must be >= 0", "estimator.alpha");
  }
  b.mre.ew_alpha = s.alpha;

  b.disturbance.seed = s.seed;
  b.disturbance.d_bar = s.d_bar;
  b.disturbance.hold_step = s.hold_step;

  return b;
}

RunSummary summarize(const SimTrace& trace) {
  RunSummary r;
  r.final_theta_err = trace.final_theta_err;
  r.completed_denied = trace.completed_denied;
  r.max_V = trace.max_V;
  double sum = 0.0;
  for (const auto& [sigma, budget] : trace.denied_budgets) {
    sum += budget;
    r.max_denied_budget = std::max(r.max_denied_budget, budget);
  }
  if (!trace.denied_budgets.empty()) {
    r.mean_denied_budget = sum / static_cast<double>(trace.denied_budgets.size());
  }
  return r;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace, int n, int p) {
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",xhat" << i;
  for (int i = 1; i <= n; ++i) os << ",xd" << i;
  for (int i = 1; i <= n; ++i) os << ",u" << i;
  for (int i = 1; i <= p; ++i) os << ",thetahat" << i;
  for (int i = 1; i <= p; ++i) os << ",thetatilde" << i;
  for (int i = 1; i <= n; ++i) os << ",e1_" << i;
  for (int i = 1; i <= n; ++i) os << ",e2_" << i;
  os << ",V,phase,sigma\n";
  for (const auto& r : trace.records) {
    os << g17(r.t);
    auto emit = [&](const Eigen::VectorXd& v) {
      for (Eigen::Index i = 0; i < v.size(); ++i) os << "," << g17(v[i]);
    };
    emit(r.x);
    emit(r.xhat);
    emit(r.xd);
    emit(r.u);
    emit(r.theta_hat);
    emit(r.theta_tilde);
    emit(r.e1);
    emit(r.e2);
    os << "," << g17(r.V) << "," << to_string(r.phase) << "," << r.sigma << "\n";
  }
}

void write_switches_csv(std::ostream& os, const SimTrace& trace) {
  os << "sigma,kind,t,V,theta_bound,budget\n";
  for (const auto& sw : trace.switches) {
    os << sw.sigma << "," << to_string(sw.kind) << "," << g17(sw.t) << ","
       << g17(sw.V) << "," << g17(sw.theta_bound) << "," << g17(sw.budget)
       << "\n";
  }
}

void write_dwell_csv(std::ostream& os, const SimTrace& trace) {
  os << "sigma,denied_budget\n";
  for (const auto& [sigma, budget] : trace.denied_budgets) {
    os << sigma << "," << g17(budget) << "\n";
  }
}

RunSummary run_scenario(const Scenario& s) {
  BuiltScenario b = build(s);
  Simulator sim = b.make_simulator();
  const SimTrace trace = sim.run();

  namespace fs = std::filesystem;
  fs::create_directories(s.out_dir);
  auto open = [&](const char* name) {
    std::ofstream out(fs::path(s.out_dir) / name);
    if (!out) {
      throw ConfigError(std::string("cannot write output file: ") + name,
                        "outputs.directory");
    }
    return out;
  };
  {
    auto os = open("trace.csv");
    write_trace_csv(os, trace, b.model->state_dim(), b.model->param_dim());
  }
  {
    auto os = open("switches.csv");
    write_switches_csv(os, trace);
  }
  {
    auto os = open("dwell.csv");
    write_dwell_csv(os, trace);
  }
  return summarize(trace);
}

std::vector<SweepRow> run_sweep(const Scenario& base, const std::string& param,
                                const std::vector<double>& values) {
  if (values.empty()) {
    throw ConfigError("sweep needs at least one value", "sweep.values");
  }
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (double v : values) {
    Scenario s = base;
    if (param == "d_bar") {
      s.d_bar = v;
    } else if (param == "k_theta") {
      s.k_theta = v;
    } else if (param == "N") {
      const double r = std::round(v);
      if (std::abs(v - r) > 1e-9 || r < 1.0) {
        throw ConfigError("N sweep values must be positive integers",
                          "sweep.values");
      }
      s.N = static_cast<int>(r);
    } else if (param == "lambda_admit") {
      s.lambda_admit = v;
    } else if (param == "V_u") {
      s.V_u = v;
    } else {
      throw ConfigError("unknown sweep parameter '" + param +
                            "' (expected d_bar | k_theta | N | lambda_admit "
                            "| V_u)",
                        "sweep.param");
    }
    BuiltScenario b = build(s);
    Simulator sim = b.make_simulator();
    rows.push_back({param, v, summarize(sim.run())});
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "param,value,final_theta_err,completed_denied,mean_denied_budget,"
        "max_denied_budget,max_V\n";
  for (const auto& r : rows) {
    os << r.param << "," << g17(r.value) << "," << g17(r.summary.final_theta_err)
       << "," << r.summary.completed_denied << ","
       << g17(r.summary.mean_denied_budget) << ","
       << g17(r.summary.max_denied_budget) << "," << g17(r.summary.max_V)
       << "\n";
  }
}

}  // namespace itrack
