#pragma once

#include <Eigen/Dense>
#include <optional>

#include "itrack/dynamics.hpp"
#include "itrack/errors.hpp"
#include "itrack/types.hpp"

namespace itrack {

struct GainSet {
  Eigen::MatrixXd k1;            // n x n, symmetric part positive definite
  Eigen::MatrixXd k2;            // n x n, symmetric part positive definite
  double boundary_layer = 0.05;  // saturation half-width for the sliding term
  bool pure_sign = false;        // use the discontinuous sign instead of sat

  void validate() const;
  double k1_min() const;  // smallest eigenvalue of the symmetric part of k1
  double k2_min() const;
};

struct ErrorState {
  Eigen::VectorXd e1;  // x - x_hat
  Eigen::VectorXd e2;  // x_hat - x_d
  double V;            // 0.5 ||e1||^2 + 0.5 ||e2||^2
};

ErrorState errors(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
                  const Eigen::VectorXd& x_d);

/// Robustifying observer injection k1*e1 + (d_bar + Y_bar*theta_bound) *
/// sat(e1 / boundary_layer), valid only while the state measurement (hence
/// e1) is available.
Eigen::VectorXd sliding_term(const Eigen::VectorXd& e1, double theta_bound,
                             double d_bar, double Y_bar, const GainSet& gains,
                             PhaseKind phase);

/// Observer right-hand side. v_r must be present exactly when the phase is
/// Available; a mismatch is a phase error.
///   Available: f(t,x_hat) + Y(t,x_hat)*theta_hat + u + v_r
///   Denied:    f(t,x_hat) + Y(t,x_hat)*theta_hat + u
Eigen::VectorXd observer_rate(const SystemModel& model, double t,
                              const Eigen::VectorXd& x_hat,
                              const Eigen::VectorXd& theta_hat,
                              const Eigen::VectorXd& u, PhaseKind phase,
                              const std::optional<Eigen::VectorXd>& v_r);

/// Tracking controller. Same v_r/phase pairing rule as observer_rate.
///   u = xd_rate - f(t,x_hat) - k2*e2 [- v_r] - Y(t,x_hat)*theta_hat
/// Substituted into the observer this gives x_hat' = xd_rate - k2*e2 in both
/// phases, i.e. e2' = -k2 e2 independent of the schedule.
Eigen::VectorXd control_input(const SystemModel& model, const GainSet& gains,
                              double t, const Eigen::VectorXd& x_hat,
                              const Eigen::VectorXd& xd_rate,
                              const Eigen::VectorXd& e2,
                              const Eigen::VectorXd& theta_hat, PhaseKind phase,
                              const std::optional<Eigen::VectorXd>& v_r);

}  // namespace itrack
