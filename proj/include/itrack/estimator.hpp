#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "itrack/errors.hpp"
#include "itrack/types.hpp"

namespace itrack {

struct EstimatorConfig {
  double k_theta = 5.0;
  Eigen::MatrixXd Gamma;        // p x p symmetric positive definite
  Eigen::VectorXd theta_hat0;   // p
  double theta_norm_bound = 1.2;  // a-priori bound on ||theta||

  // Proof-constant calibration used by the bound machinery (see uub_constants):
  // k_xi bounds the filtered residual as ||Xi|| <= k_xi * d_bar; lambda_y is
  // the excitation level assumed once the information matrix is charged.
  double k_xi = 0.05;
  double lambda_y = 0.15;

  void validate() const;
  int param_dim() const { return static_cast<int>(theta_hat0.size()); }
  double gamma_inv_min() const;  // smallest eigenvalue of Gamma^{-1}
  double gamma_inv_max() const;  // largest eigenvalue of Gamma^{-1}
  /// Conservative seed for the estimation-error bound: theta_norm_bound +
  /// ||theta_hat0||.
  double initial_error_bound() const;
};

/// Adaptation rate: k_theta * Gamma * (U - Y*theta_hat) once the excitation
/// time T_excite has been reached, and exactly zero before it or while the
/// feedback phase is Denied (estimates are frozen open-loop).
Eigen::VectorXd theta_rate(const EstimatorConfig& cfg,
                           const Eigen::VectorXd& theta_hat,
                           const Eigen::VectorXd& U, const Eigen::MatrixXd& Y,
                           double t, std::optional<double> T_excite,
                           PhaseKind phase);

/// Ultimate-boundedness constants for the adaptation error:
///   rho    = k_theta * lambda_y / 4
///   varpi  = k_theta * k_xi^2 * d_bar^2 / (2 * lambda_y)
///   radius = sqrt((gamma_hi / gamma_lo) * (varpi / rho))
/// where gamma_hi/gamma_lo are the extreme eigenvalues of Gamma^{-1}.
struct UubConstants {
  double rho = 0.0;
  double varpi = 0.0;
  double radius = 0.0;
  double gamma_hi = 0.0;  // lambda_max(Gamma^{-1})
  double gamma_lo = 0.0;  // lambda_min(Gamma^{-1})
};

UubConstants uub_constants(const EstimatorConfig& cfg, double lambda_y,
                           double k_xi, double d_bar);

/// Error-bound decay over one adaptation window of the given length:
///   sqrt((gamma_hi/gamma_lo) (b^2 e^{-rho L / gamma_hi}
///                             + (varpi/rho)(1 - e^{-rho L / gamma_hi}))).
/// Monotone toward the UUB radius from either side.
double propagate_bound(double theta_bound_in, double elapsed,
                       const UubConstants& consts);

/// Closed-form bound after a sequence of adaptation windows; exactly the
/// unrolled composition of propagate_bound over the list.
double recursive_bound(double theta0, const std::vector<double>& lengths,
                       const UubConstants& consts);

/// Running record of the certified estimation-error bound: the current value
/// plus the value captured at the end of each feedback-available interval.
struct ThetaBoundTracker {
  double current = 0.0;
  std::vector<std::pair<int, double>> at_interval_end;  // (sigma, bound)
};

}  // namespace itrack
