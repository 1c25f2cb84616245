#include "itrack/estimator.hpp"

#include <cmath>

namespace itrack {

void EstimatorConfig::validate() const {
  if (!(k_theta > 0.0) || !std::isfinite(k_theta)) {
    throw InvalidInput("EstimatorConfig: k_theta must be finite and > 0");
  }
  const auto p = theta_hat0.size();
  if (p < 1 || Gamma.rows() != p || Gamma.cols() != p) {
    throw InvalidInput("EstimatorConfig: Gamma and theta_hat0 sizes disagree");
  }
  if (!Gamma.allFinite() || !theta_hat0.allFinite()) {
    throw InvalidInput("EstimatorConfig: non-finite entries");
  }
  if (!Gamma.isApprox(Gamma.transpose(), 1e-10)) {
    throw InvalidInput("EstimatorConfig: Gamma must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gamma, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidInput("EstimatorConfig: Gamma must be positive definite");
  }
  if (!(theta_norm_bound >= 0.0)) {
    throw InvalidInput("EstimatorConfig: theta_norm_bound must be >= 0");
  }
  if (!(k_xi > 0.0) || !(lambda_y > 0.0)) {
    throw InvalidInput("EstimatorConfig: k_xi and lambda_y must be > 0");
  }
}

double EstimatorConfig::gamma_inv_min() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gamma, Eigen::EigenvaluesOnly);
  return 1.0 / es.eigenvalues().maxCoeff();
}

double EstimatorConfig::gamma_inv_max() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Gamma, Eigen::EigenvaluesOnly);
  return 1.0 / es.eigenvalues().minCoeff();
}

double EstimatorConfig::initial_error_bound() const {
  return theta_norm_bound + theta_hat0.norm();
}

Eigen::VectorXd theta_rate(const EstimatorConfig& cfg,
                           const Eigen::VectorXd& theta_hat,
                           const Eigen::VectorXd& U, const Eigen::MatrixXd& Y,
                           double t, std::optional<double> T_excite,
                           PhaseKind phase) {
  const auto p = theta_hat.size();
  if (U.size() != p || Y.rows() != p || Y.cols() != p ||
      cfg.Gamma.rows() != p) {
    throw InvalidInput("theta_rate: dimension mismatch");
  }
  if (phase == PhaseKind::Denied || !T_excite.has_value() || t < *T_excite) {
    return Eigen::VectorXd::Zero(p);
  }
  return cfg.k_theta * cfg.Gamma * (U - Y * theta_hat);
}

UubConstants uub_constants(const EstimatorConfig& cfg, double lambda_y,
                           double k_xi, double d_bar) {
  if (!(lambda_y > 0.0)) {
    throw InvalidInput("uub_constants: lambda_y must be > 0");
  }
  if (!(k_xi >= 0.0) || !(d_bar >= 0.0)) {
    throw InvalidInput("uub_constants: k_xi and d_bar must be >= 0");
  }
  UubConstants c;
  c.gamma_hi = cfg.gamma_inv_max();
  c.gamma_lo = cfg.gamma_inv_min();
  c.rho = cfg.k_theta * lambda_y / 4.0;
  c.varpi = cfg.k_theta * k_xi * k_xi * d_bar * d_bar / (2.0 * lambda_y);
  c.radius = std::sqrt((c.gamma_hi / c.gamma_lo) * (c.varpi / c.rho));
  return c;
}

double propagate_bound(double theta_bound_in, double elapsed,
                       const UubConstants& consts) {
  if (!(theta_bound_in >= 0.0) || !(elapsed >= 0.0)) {
    throw InvalidInput("propagate_bound: bound and elapsed must be >= 0");
  }
  if (!(consts.rho > 0.0) || !(consts.gamma_hi > 0.0) ||
      !(consts.gamma_lo > 0.0)) {
    throw InvalidInput("propagate_bound: constants must be positive");
  }
  const double A = consts.gamma_hi / consts.gamma_lo;
  const double gamma = consts.varpi / consts.rho;
  const double E = std::exp(-consts.rho * elapsed / consts.gamma_hi);
  return std::sqrt(A * (theta_bound_in * theta_bound_in * E +
                        gamma * (1.0 - E)));
}

double recursive_bound(double theta0, const std::vector<double>& lengths,
                       const UubConstants& consts) {
  if (!(theta0 >= 0.0)) {
    throw InvalidInput("recursive_bound: theta0 must be >= 0");
  }
  if (!(consts.rho > 0.0) || !(consts.gamma_hi > 0.0) ||
      !(consts.gamma_lo > 0.0)) {
    throw InvalidInput("recursive_bound: constants must be positive");
  }
  const double A = consts.gamma_hi / consts.gamma_lo;
  const double gamma = consts.varpi / consts.rho;
  const int m = static_cast<int>(lengths.size());

  std::vector<double> E(lengths.size());
  for (std::size_t j = 0; j < lengths.size(); ++j) {
    if (!(lengths[j] >= 0.0)) {
      throw InvalidInput("recursive_bound: lengths must be >= 0");
    }
    E[j] = std::exp(-consts.rho * lengths[j] / consts.gamma_hi);
  }

  // Squared bound after m windows: the homogeneous term carries every decay
  // factor and one A per window; the forcing injected in window j (0-based)
  // then passes through the remaining windows' decay and A factors.
  double lead = theta0 * theta0 * std::pow(A, m);
  for (double e : E) lead *= e;

  double forcing = 0.0;
  for (int j = 0; j < m; ++j) {
    double tail = 1.0;
    for (int i = j + 1; i < m; ++i) tail *= E[static_cast<std::size_t>(i)];
    forcing += std::pow(A, m - j) * (1.0 - E[static_cast<std::size_t>(j)]) * tail;
  }
  return std::sqrt(lead + gamma * forcing);
}

}  // namespace itrack
