#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "itrack/errors.hpp"

namespace itrack {

/// Plant family: xdot = f(t,x) + Y(t,x)*theta + u + d, with f and Y known
/// maps, theta an unknown constant parameter vector and d a bounded
/// disturbance. Controller/observer/estimator code must only ever call
/// drift() and regressor(); theta_true() exists so the simulation engine can
/// integrate the real plant and report estimation error, and is deliberately
/// not part of any feedback-path signature.
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual int state_dim() const = 0;
  virtual int param_dim() const = 0;

  /// f(t, x). Throws InvalidInput on non-finite or wrongly sized x.
  virtual Eigen::VectorXd drift(double t, const Eigen::VectorXd& x) const = 0;

  /// Y(t, x), state_dim x param_dim. Same input checks as drift().
  virtual Eigen::MatrixXd regressor(double t, const Eigen::VectorXd& x) const = 0;

  /// Ground-truth parameters (simulation-only; see class comment).
  virtual const Eigen::VectorXd& theta_true() const = 0;

  /// Component-wise disturbance bound d_bar (|d_i| <= d_bar).
  virtual double disturbance_bound() const = 0;
};

/// Two-state benchmark plant:
///   f(x) = [x2, x1],  Y(x) = [[0, 0], [-x1, -x1^3]].
class BenchmarkModel : public SystemModel {
 public:
  BenchmarkModel(Eigen::VectorXd theta, double d_bar);

  int state_dim() const override { return 2; }
  int param_dim() const override { return 2; }
  Eigen::VectorXd drift(double t, const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd regressor(double t, const Eigen::VectorXd& x) const override;
  const Eigen::VectorXd& theta_true() const override { return theta_; }
  double disturbance_bound() const override { return d_bar_; }

 private:
  Eigen::VectorXd theta_;
  double d_bar_;
};

/// Full plant right-hand side f + Y*theta + u + d. Lives here (with the model)
/// so theta stays out of the controller-side call signatures.
Eigen::VectorXd plant_rate(const SystemModel& model, double t,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& d);

/// Reference trajectory with its derivative and sup-norm bounds.
class DesiredTrajectory {
 public:
  virtual ~DesiredTrajectory() = default;
  virtual Eigen::VectorXd value(double t) const = 0;
  virtual Eigen::VectorXd rate(double t) const = 0;
  virtual double sup_value() const = 0;  // sup_t ||x_d(t)||
  virtual double sup_rate() const = 0;   // sup_t ||xdot_d(t)||
};

/// x_d(t) = [sin(w t), w cos(w t)] — second component is the first's rate.
class SineTrajectory : public DesiredTrajectory {
 public:
  explicit SineTrajectory(double omega = 2.0);
  Eigen::VectorXd value(double t) const override;
  Eigen::VectorXd rate(double t) const override;
  double sup_value() const override;
  double sup_rate() const override;

 private:
  double omega_;
};

/// Sample-and-hold disturbance, uniform on [-d_bar, d_bar] per component.
/// The held value for hold interval k is a pure hash of (seed, k, component):
/// bitwise reproducible, order-independent, and stable under step refinement
/// as long as hold boundaries stay aligned to the integration grid.
struct DisturbanceGenerator {
  std::uint64_t seed = 1;
  double d_bar = 1.5;
  double hold_step = 1e-3;

  /// Held value on the k-th hold interval [k*hold_step, (k+1)*hold_step).
  Eigen::VectorXd at_hold_index(std::int64_t k, int n) const;

  /// Convenience wrapper: value at continuous time t (>= 0).
  Eigen::VectorXd sample(double t, int n) const;
};

/// Empirical bounds over the centred sup-norm box |x_i| <= box_halfwidth,
/// estimated from pairwise difference quotients on a uniform grid.
struct LipschitzEstimates {
  double L_f = 0.0;    // Lipschitz constant of f
  double L_Y = 0.0;    // Lipschitz constant of x -> Y(t,x) (spectral norm)
  double Y_sup = 0.0;  // sup of ||Y(t,x)|| over the box
};

/// level selects the grid: 4*2^level + 1 points per axis. Grids are nested,
/// so estimates are non-decreasing in level.
LipschitzEstimates lipschitz_bounds(const SystemModel& model, double t,
                                    double box_halfwidth, int level = 2);

}  // namespace itrack
