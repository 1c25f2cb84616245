#include "itrack/control.hpp"

#include <cmath>

namespace itrack {

namespace {

double min_eig_sym_part(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

void GainSet::validate() const {
  if (k1.rows() != k1.cols() || k2.rows() != k2.cols() ||
      k1.rows() != k2.rows() || k1.rows() == 0) {
    throw InvalidInput("GainSet: k1 and k2 must be square with equal size");
  }
  if (!k1.allFinite() || !k2.allFinite()) {
    throw InvalidInput("GainSet: non-finite gains");
  }
  if (min_eig_sym_part(k1) <= 0.0 || min_eig_sym_part(k2) <= 0.0) {
    throw InvalidInput("GainSet: symmetric parts of k1 and k2 must be positive definite");
  }
  if (!(boundary_layer > 0.0) || !std::isfinite(boundary_layer)) {
    throw InvalidInput("GainSet: boundary_layer must be finite and > 0");
  }
}

double GainSet::k1_min() const { return min_eig_sym_part(k1); }
double GainSet::k2_min() const { return min_eig_sym_part(k2); }

ErrorState errors(const Eigen::VectorXd& x, const Eigen::VectorXd& x_hat,
                  const Eigen::VectorXd& x_d) {
  if (x.size() != x_hat.size() || x.size() != x_d.size()) {
    throw InvalidInput("errors: dimension mismatch");
  }
  ErrorState e;
  e.e1 = x - x_hat;
  e.e2 = x_hat - x_d;
  e.V = 0.5 * e.e1.squaredNorm() + 0.5 * e.e2.squaredNorm();
  return e;
}

Eigen::VectorXd sliding_term(const Eigen::VectorXd& e1, double theta_bound,
                             double d_bar, double Y_bar, const GainSet& gains,
                             PhaseKind phase) {
  if (phase == PhaseKind::Denied) {
    throw PhaseError("sliding_term: e1 is not measurable while Denied");
  }
  if (e1.size() != gains.k1.rows()) {
    throw InvalidInput("sliding_term: e1 dimension mismatch");
  }
  if (!(theta_bound >= 0.0) || !(d_bar >= 0.0) || !(Y_bar >= 0.0)) {
    throw InvalidInput("sliding_term: bounds must be >= 0");
  }
  const double gain = d_bar + Y_bar * theta_bound;
  Eigen::VectorXd sw(e1.size());
  for (Eigen::Index i = 0; i < e1.size(); ++i) {
    if (gains.pure_sign) {
      sw(i) = e1(i) > 0.0 ? 1.0 : (e1(i) < 0.0 ? -1.0 : 0.0);
    } else {
      sw(i) = std::clamp(e1(i) / gains.boundary_layer, -1.0, 1.0);
    }
  }
  return gains.k1 * e1 + gain * sw;
}

namespace {

void check_vr(PhaseKind phase, const std::optional<Eigen::VectorXd>& v_r,
              Eigen::Index n, const char* who) {
  if (phase == PhaseKind::Available && !v_r.has_value()) {
    throw PhaseError(std::string(who) +
                     ": Available phase requires the sliding term");
  }
  if (phase == PhaseKind::Denied && v_r.has_value()) {
    throw PhaseError(std::string(who) +
                     ": sliding term supplied while Denied");
  }
  if (v_r.has_value() && v_r->size() != n) {
    throw InvalidInput(std::string(who) + ": sliding term dimension mismatch");
  }
}

}  // namespace

Eigen::VectorXd observer_rate(const SystemModel& model, double t,
                              const Eigen::VectorXd& x_hat,
                              const Eigen::VectorXd& theta_hat,
                              const Eigen::VectorXd& u, PhaseKind phase,
                              const std::optional<Eigen::VectorXd>& v_r) {
  const int n = model.state_dim();
  if (x_hat.size() != n || u.size() != n ||
      theta_hat.size() != model.param_dim()) {
    throw InvalidInput("observer_rate: dimension mismatch");
  }
  check_vr(phase, v_r, n, "observer_rate");
  Eigen::VectorXd rate =
      model.drift(t, x_hat) + model.regressor(t, x_hat) * theta_hat + u;
  if (v_r.has_value()) rate += *v_r;
  return rate;
}

Eigen::VectorXd control_input(const SystemModel& model, const GainSet& gains,
                              double t, const Eigen::VectorXd& x_hat,
                              const Eigen::VectorXd& xd_rate,
                              const Eigen::VectorXd& e2,
                              const Eigen::VectorXd& theta_hat, PhaseKind phase,
                              const std::optional<Eigen::VectorXd>& v_r) {
  const int n = model.state_dim();
  if (x_hat.size() != n || xd_rate.size() != n || e2.size() != n ||
      theta_hat.size() != model.param_dim()) {
    throw InvalidInput("control_input: dimension mismatch");
  }
  check_vr(phase, v_r, n, "control_input");
  Eigen::VectorXd u = xd_rate - model.drift(t, x_hat) - gains.k2 * e2 -
                      model.regressor(t, x_hat) * theta_hat;
  if (v_r.has_value()) u -= *v_r;
  return u;
}

}  // namespace itrack
