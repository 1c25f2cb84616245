#include "itrack/dynamics.hpp"

#include <cmath>
#include <vector>

namespace itrack {

namespace {

void check_state(const Eigen::VectorXd& x, int n, const char* who) {
  if (x.size() != n) {
    throw InvalidInput(std::string(who) + ": state has size " +
                       std::to_string(x.size()) + ", expected " +
                       std::to_string(n));
  }
  if (!x.allFinite()) {
    throw InvalidInput(std::string(who) + ": non-finite state");
  }
}

// splitmix64 finalizer — the standard avalanche mix.
std::uint64_t sm64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

// ---- BenchmarkModel ---------------------------------------------------------

BenchmarkModel::BenchmarkModel(Eigen::VectorXd theta, double d_bar)
    : theta_(std::move(theta)), d_bar_(d_bar) {
  if (theta_.size() != 2 || !theta_.allFinite()) {
    throw InvalidInput("BenchmarkModel: theta must be a finite 2-vector");
  }
  if (!(d_bar_ >= 0.0) || !std::isfinite(d_bar_)) {
    throw InvalidInput("BenchmarkModel: d_bar must be finite and >= 0");
  }
}

Eigen::VectorXd BenchmarkModel::drift(double, const Eigen::VectorXd& x) const {
  check_state(x, 2, "BenchmarkModel::drift");
  Eigen::VectorXd f(2);
  f << x(1), x(0);
  return f;
}

Eigen::MatrixXd BenchmarkModel::regressor(double, const Eigen::VectorXd& x) const {
  check_state(x, 2, "BenchmarkModel::regressor");
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(2, 2);
  Y(1, 0) = -x(0);
  Y(1, 1) = -x(0) * x(0) * x(0);
  return Y;
}

// ---- plant_rate -------------------------------------------------------------

Eigen::VectorXd plant_rate(const SystemModel& model, double t,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& d) {
  const int n = model.state_dim();
  check_state(x, n, "plant_rate");
  if (u.size() != n || d.size() != n) {
    throw InvalidInput("plant_rate: u and d must match the state dimension");
  }
  return model.drift(t, x) + model.regressor(t, x) * model.theta_true() + u + d;
}

// ---- SineTrajectory ---------------------------------------------------------

SineTrajectory::SineTrajectory(double omega) : omega_(omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw InvalidInput("SineTrajectory: omega must be finite and > 0");
  }
}

Eigen::VectorXd SineTrajectory::value(double t) const {
  Eigen::VectorXd v(2);
  v << std::sin(omega_ * t), omega_ * std::cos(omega_ * t);
  return v;
}

Eigen::VectorXd SineTrajectory::rate(double t) const {
  Eigen::VectorXd v(2);
  v << omega_ * std::cos(omega_ * t), -omega_ * omega_ * std::sin(omega_ * t);
  return v;
}

double SineTrajectory::sup_value() const {
  // sqrt(sin^2 + w^2 cos^2) <= max(1, w)
  return std::max(1.0, omega_);
}

double SineTrajectory::sup_rate() const {
  return std::max(omega_, omega_ * omega_);
}

// ---- DisturbanceGenerator ---------------------------------------------------

Eigen::VectorXd DisturbanceGenerator::at_hold_index(std::int64_t k, int n) const {
  if (n <= 0) throw InvalidInput("DisturbanceGenerator: n must be positive");
  if (k < 0) throw InvalidInput("DisturbanceGenerator: hold index must be >= 0");
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    std::uint64_t h = sm64(seed ^ 0x9e3779b97f4a7c15ULL);
    h = sm64(h ^ static_cast<std::uint64_t>(k));
    h = sm64(h ^ static_cast<std::uint64_t>(i));
    const double u01 = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
    d(i) = d_bar * (2.0 * u01 - 1.0);
  }
  return d;
}

Eigen::VectorXd DisturbanceGenerator::sample(double t, int n) const {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw InvalidInput("DisturbanceGenerator: t must be finite and >= 0");
  }
  if (!(hold_step > 0.0)) {
    throw InvalidInput("DisturbanceGenerator: hold_step must be > 0");
  }
  // Nudge to keep on-grid queries (t = k*hold_step) in interval k despite
  // rounding in the division.
  const auto k =
      static_cast<std::int64_t>(std::floor(t / hold_step + 1e-9));
  return at_hold_index(k, n);
}

// ---- lipschitz_bounds -------------------------------------------------------

LipschitzEstimates lipschitz_bounds(const SystemModel& model, double t,
                                    double box_halfwidth, int level) {
  if (!(box_halfwidth > 0.0) || !std::isfinite(box_halfwidth)) {
    throw InvalidInput("lipschitz_bounds: box_halfwidth must be > 0");
  }
  if (level < 0 || level > 6) {
    throw InvalidInput("lipschitz_bounds: level must be in [0, 6]");
  }
  const int n = model.state_dim();
  if (n > 3) {
    // All-pairs sampling over a dense grid is only practical in low dimension.
    throw InvalidInput("lipschitz_bounds: grid estimation supports n <= 3");
  }
  const int m = 4 * (1 << level) + 1;  // points per axis; nested across levels

  // Enumerate the grid.
  std::vector<Eigen::VectorXd> pts;
  const int total = static_cast<int>(std::pow(m, n));
  pts.reserve(total);
  for (int idx = 0; idx < total; ++idx) {
    Eigen::VectorXd x(n);
    int rem = idx;
    for (int dim = 0; dim < n; ++dim) {
      const int g = rem % m;
      rem /= m;
      x(dim) = -box_halfwidth + 2.0 * box_halfwidth * g / (m - 1);
    }
    pts.push_back(std::move(x));
  }

  std::vector<Eigen::VectorXd> fs;
  std::vector<Eigen::MatrixXd> Ys;
  fs.reserve(pts.size());
  Ys.reserve(pts.size());
  for (const auto& x : pts) {
    fs.push_back(model.drift(t, x));
    Ys.push_back(model.regressor(t, x));
  }

  LipschitzEstimates est;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    est.Y_sup = std::max(est.Y_sup, Ys[i].operatorNorm());
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dx = (pts[i] - pts[j]).norm();
      if (dx <= 0.0) continue;
      est.L_f = std::max(est.L_f, (fs[i] - fs[j]).norm() / dx);
      est.L_Y = std::max(est.L_Y, (Ys[i] - Ys[j]).operatorNorm() / dx);
    }
  }
  return est;
}

}  // namespace itrack
