#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "itrack/control.hpp"
#include "itrack/dynamics.hpp"
#include "itrack/errors.hpp"
#include "itrack/types.hpp"

using namespace itrack;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

const Eigen::VectorXd kTheta = vec2(1.0, 0.5);

GainSet gains(double k1, double k2, double eps = 0.05) {
  GainSet g;
  g.k1 = k1 * Eigen::MatrixXd::Identity(2, 2);
  g.k2 = k2 * Eigen::MatrixXd::Identity(2, 2);
  g.boundary_layer = eps;
  return g;
}

}  // namespace

// ---- gain validation --------------------------------------------------------

TEST_CASE("gain set validation") {
  CHECK_NOTHROW(gains(5.0, 10.0).validate());

  GainSet not_square = gains(5.0, 10.0);
  not_square.k1 = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_AS(not_square.validate(), InvalidInput);

  GainSet not_pd = gains(5.0, 10.0);
  not_pd.k2(1, 1) = -1.0;
  CHECK_THROWS_AS(not_pd.validate(), InvalidInput);

  GainSet bad_layer = gains(5.0, 10.0, 0.0);
  CHECK_THROWS_AS(bad_layer.validate(), InvalidInput);
}

TEST_CASE("gain floor helpers use the symmetric part") {
  GainSet g = gains(5.0, 10.0);
  CHECK(g.k1_min() == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(g.k2_min() == doctest::Approx(10.0).epsilon(1e-14));
  // Adding a skew component must not change the symmetric-part eigenvalues.
  g.k1(0, 1) += 3.0;
  g.k1(1, 0) -= 3.0;
  CHECK(g.k1_min() == doctest::Approx(5.0).epsilon(1e-12));
}

// ---- tracking errors --------------------------------------------------------

TEST_CASE("error split and energy value") {
  const ErrorState e = errors(vec2(-1, 1), vec2(0, 0), vec2(0, 2));
  CHECK(e.e1.isApprox(vec2(-1, 1), 1e-15));
  CHECK(e.e2.isApprox(vec2(0, -2), 1e-15));
  CHECK(e.V == doctest::Approx(3.0).epsilon(1e-15));

  const ErrorState f = errors(vec2(1, 2), vec2(0, 2), vec2(0, 0));
  CHECK(f.e1.isApprox(vec2(1, 0), 1e-15));
  CHECK(f.e2.isApprox(vec2(0, 2), 1e-15));
  CHECK(f.V == doctest::Approx(2.5).epsilon(1e-15));

  CHECK_THROWS_AS(errors(vec2(0, 0), Eigen::VectorXd::Zero(3), vec2(0, 0)),
                  InvalidInput);
}

// ---- sliding term -----------------------------------------------------------

TEST_CASE("sliding term vanishes at zero error") {
  const Eigen::VectorXd v = sliding_term(vec2(0, 0), 1.2, 1.5, 8.0,
                                         gains(5.0, 10.0), PhaseKind::Available);
  CHECK(v.isZero(0.0));
}

TEST_CASE("sliding term saturated value") {
  // k1 = I, robust gain = d_bar + Y_bar * bound = 1.5 + 1 * 1.5 = 3; with a
  // tiny boundary layer the first component saturates: 1 + 3 = 4.
  const Eigen::VectorXd v = sliding_term(vec2(1, 0), 1.5, 1.5, 1.0,
                                         gains(1.0, 1.0, 1e-6),
                                         PhaseKind::Available);
  CHECK(v.isApprox(vec2(4.0, 0.0), 1e-12));
}

TEST_CASE("sliding term scales linearly in the robust gain") {
  const GainSet g = gains(1.0, 1.0, 1e-6);
  const Eigen::VectorXd lo =
      sliding_term(vec2(1, 0), 1.0, 1.0, 1.0, g, PhaseKind::Available);
  const Eigen::VectorXd hi =
      sliding_term(vec2(1, 0), 2.0, 2.0, 1.0, g, PhaseKind::Available);
  // gain lo: 1 + 1*1 = 2 -> v = 1 + 2; gain hi: 2 + 1*2 = 4 -> v = 1 + 4.
  CHECK(lo(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(hi(0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("sliding term is linear inside the boundary layer") {
  const GainSet g = gains(2.0, 1.0, 0.05);
  // |e1| = 0.01 < eps: sat = e1/eps = 0.2, v = 2*0.01 + 3*0.2 = 0.62.
  const Eigen::VectorXd v =
      sliding_term(vec2(0.01, 0.0), 1.0, 1.0, 2.0, g, PhaseKind::Available);
  CHECK(v(0) == doctest::Approx(0.62).epsilon(1e-12));
  CHECK(v(1) == 0.0);
}

TEST_CASE("pure sign mode replaces the saturation") {
  GainSet g = gains(1.0, 1.0, 0.05);
  g.pure_sign = true;
  const Eigen::VectorXd v =
      sliding_term(vec2(0.01, -0.02), 1.0, 1.0, 1.0, g, PhaseKind::Available);
  CHECK(v(0) == doctest::Approx(0.01 + 2.0).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(-0.02 - 2.0).epsilon(1e-12));
}

TEST_CASE("sliding term is rejected while feedback is denied") {
  CHECK_THROWS_AS(sliding_term(vec2(1, 0), 1.0, 1.0, 1.0, gains(1.0, 1.0),
                               PhaseKind::Denied),
                  PhaseError);
}

TEST_CASE("sliding term input validation") {
  const GainSet g = gains(1.0, 1.0);
  CHECK_THROWS_AS(sliding_term(Eigen::VectorXd::Zero(3), 1.0, 1.0, 1.0, g,
                               PhaseKind::Available),
                  InvalidInput);
  CHECK_THROWS_AS(sliding_term(vec2(1, 0), -1.0, 1.0, 1.0, g,
                               PhaseKind::Available),
                  InvalidInput);
}

// ---- observer rate ----------------------------------------------------------

TEST_CASE("observer rate while denied uses only the internal model") {
  BenchmarkModel m(kTheta, 1.5);
  // f([-1,1]) = [1,-1], Y([-1,1]) * [1, 0.5] = [0, 1.5]; u = 0.
  const Eigen::VectorXd rate =
      observer_rate(m, 0.0, vec2(-1, 1), vec2(1.0, 0.5), vec2(0, 0),
                    PhaseKind::Denied, std::nullopt);
  CHECK(rate.isApprox(vec2(1.0, 0.5), 1e-14));
}

TEST_CASE("observer rate with zero injection matches the denied expression") {
  BenchmarkModel m(kTheta, 1.5);
  const Eigen::VectorXd denied =
      observer_rate(m, 0.0, vec2(-1, 1), vec2(1.0, 0.5), vec2(0.3, -0.2),
                    PhaseKind::Denied, std::nullopt);
  const Eigen::VectorXd available =
      observer_rate(m, 0.0, vec2(-1, 1), vec2(1.0, 0.5), vec2(0.3, -0.2),
                    PhaseKind::Available, vec2(0, 0));
  CHECK(denied == available);
}

TEST_CASE("observer rate enforces the phase/injection pairing") {
  BenchmarkModel m(kTheta, 1.5);
  CHECK_THROWS_AS(observer_rate(m, 0.0, vec2(0, 0), vec2(0, 0), vec2(0, 0),
                                PhaseKind::Available, std::nullopt),
                  PhaseError);
  CHECK_THROWS_AS(observer_rate(m, 0.0, vec2(0, 0), vec2(0, 0), vec2(0, 0),
                                PhaseKind::Denied, vec2(0, 0)),
                  PhaseError);
}

// ---- control input ----------------------------------------------------------

TEST_CASE("control input hand value while denied") {
  BenchmarkModel m(kTheta, 1.5);
  // u = xd_rate - f(x_hat) - k2 e2 - Y(x_hat) theta_hat with x_hat = xd = [0,2]:
  // [2,0] - [2,0] - 2*[0,-2] - 0 = [0,4].
  const Eigen::VectorXd u =
      control_input(m, gains(1.0, 2.0), 0.0, vec2(0, 2), vec2(2, 0),
                    vec2(0, -2), vec2(0, 0), PhaseKind::Denied, std::nullopt);
  CHECK(u.isApprox(vec2(0.0, 4.0), 1e-14));
}

TEST_CASE("control input reduces to feedforward at zero errors") {
  BenchmarkModel m(kTheta, 1.5);
  const Eigen::VectorXd x_hat = vec2(0.4, -0.7);
  const Eigen::VectorXd xd_rate = vec2(1.0, 2.0);
  const Eigen::VectorXd theta_hat = vec2(0.9, 0.1);
  const Eigen::VectorXd u =
      control_input(m, gains(5.0, 10.0), 0.0, x_hat, xd_rate, vec2(0, 0),
                    theta_hat, PhaseKind::Denied, std::nullopt);
  const Eigen::VectorXd expect =
      xd_rate - m.drift(0.0, x_hat) - m.regressor(0.0, x_hat) * theta_hat;
  CHECK(u.isApprox(expect, 1e-14));
}

TEST_CASE("control input enforces the phase/injection pairing") {
  BenchmarkModel m(kTheta, 1.5);
  CHECK_THROWS_AS(control_input(m, gains(1, 1), 0.0, vec2(0, 0), vec2(0, 0),
                                vec2(0, 0), vec2(0, 0), PhaseKind::Available,
                                std::nullopt),
                  PhaseError);
  CHECK_THROWS_AS(control_input(m, gains(1, 1), 0.0, vec2(0, 0), vec2(0, 0),
                                vec2(0, 0), vec2(0, 0), PhaseKind::Denied,
                                vec2(0, 0)),
                  PhaseError);
}

TEST_CASE("closed observer loop collapses to pure tracking dynamics") {
  // Substituting the control input into the observer must give
  // x_hat' = xd_rate - k2 e2 exactly, in both phases: the model terms and the
  // sliding injection cancel by construction.
  BenchmarkModel m(kTheta, 1.5);
  const GainSet g = gains(5.0, 10.0);
  const Eigen::VectorXd x_hat = vec2(0.3, 1.7);
  const Eigen::VectorXd xd_rate = vec2(-0.6, 2.2);
  const Eigen::VectorXd e2 = vec2(0.25, -0.45);
  const Eigen::VectorXd theta_hat = vec2(1.1, 0.2);

  SUBCASE("denied") {
    const Eigen::VectorXd u =
        control_input(m, g, 0.7, x_hat, xd_rate, e2, theta_hat,
                      PhaseKind::Denied, std::nullopt);
    const Eigen::VectorXd rate = observer_rate(m, 0.7, x_hat, theta_hat, u,
                                               PhaseKind::Denied, std::nullopt);
    CHECK((rate - (xd_rate - g.k2 * e2)).norm() <= 1e-13);
  }
  SUBCASE("available") {
    const Eigen::VectorXd e1 = vec2(-0.15, 0.35);
    const Eigen::VectorXd v_r =
        sliding_term(e1, 1.2, 1.5, 8.0, g, PhaseKind::Available);
    const Eigen::VectorXd u = control_input(m, g, 0.7, x_hat, xd_rate, e2,
                                            theta_hat, PhaseKind::Available, v_r);
    const Eigen::VectorXd rate =
        observer_rate(m, 0.7, x_hat, theta_hat, u, PhaseKind::Available, v_r);
    CHECK((rate - (xd_rate - g.k2 * e2)).norm() <= 1e-13);
  }
}

TEST_CASE("control input dimension validation") {
  BenchmarkModel m(kTheta, 1.5);
  CHECK_THROWS_AS(control_input(m, gains(1, 1), 0.0, Eigen::VectorXd::Zero(3),
                                vec2(0, 0), vec2(0, 0), vec2(0, 0),
                                PhaseKind::Denied, std::nullopt),
                  InvalidInput);
  CHECK_THROWS_AS(observer_rate(m, 0.0, vec2(0, 0), Eigen::VectorXd::Zero(3),
                                vec2(0, 0), PhaseKind::Denied, std::nullopt),
                  InvalidInput);
}
