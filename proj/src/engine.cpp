#include "itrack/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace itrack {

void EngineConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw ConfigError("h must be finite and > 0", "engine.h");
  }
  if (h > 1e-2 + 1e-15) {
    throw ConfigError("h must not exceed 1e-2 (integration accuracy)", "engine.h");
  }
  if (record_stride < 1) {
    throw ConfigError("record_stride must be >= 1", "engine.record_stride");
  }
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw ConfigError("t_end must be finite and >= 0", "engine.t_end");
  }
  if (!(denied_budget_scale > 0.0) || !std::isfinite(denied_budget_scale)) {
    throw ConfigError("denied_budget_scale must be finite and > 0",
                      "engine.denied_budget_scale");
  }
  if (!(available_floor >= 0.0) || !std::isfinite(available_floor)) {
    throw ConfigError("available_floor must be finite and >= 0",
                      "engine.available_floor");
  }
}

Simulator::Simulator(const SystemModel& model, const DesiredTrajectory& traj,
                     EstimatorConfig est, GainSet gains, AnalysisConstants consts,
                     EngineConfig eng, MreConfig mre, DisturbanceGenerator dist)
    : model_(model),
      traj_(traj),
      est_(std::move(est)),
      gains_(std::move(gains)),
      consts_(consts),
      eng_(std::move(eng)),
      mre_(mre),
      dist_(dist) {}

namespace {

/// Offsets of the blocks packed into the composite integration state.  The
/// per-interval quadratures ride inside the RK4 state so that the regressor
/// pairs are consistent with the plant trajectory to integrator accuracy,
/// which keeps the pair identity U = Y th + Xi exact up to roundoff.
struct Layout {
  int n = 0, p = 0;
  int x = 0, xhat = 0, th = 0, int_fu = 0, int_Y = 0, int_d = 0;
  // Convolution-filter block (only allocated for that variant).
  int xf = -1, wf = -1, Yf = -1, df = -1, a = -1;
  int total = 0;

  Layout(int n_, int p_, bool expfilter) : n(n_), p(p_) {
    int off = 0;
    x = off; off += n;
    xhat = off; off += n;
    th = off; off += p;
    int_fu = off; off += n;
    int_Y = off; off += n * p;
    int_d = off; off += n;
    if (expfilter) {
      xf = off; off += n;
      wf = off; off += n;
      Yf = off; off += n * p;
      df = off; off += n;
      a = off; off += n;
    }
    total = off;
  }
};

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int n, int p) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), n, p);
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace

SimTrace Simulator::run() {
  est_.validate();
  gains_.validate();
  consts_.validate();
  eng_.validate();
  mre_.filter.validate();
  if (mre_.stack_capacity < 1) {
    throw ConfigError("stack capacity must be >= 1", "estimator.N");
  }
  if (!(mre_.ew_alpha >= 0.0) || !std::isfinite(mre_.ew_alpha)) {
    throw ConfigError("forgetting factor must be finite and >= 0", "estimator.alpha");
  }

  const int n = model_.state_dim();
  const int p = model_.param_dim();
  if (static_cast<int>(est_.Gamma.rows()) != p) {
    throw ConfigError("adaptation gain size must match the parameter dimension",
                      "estimator.Gamma");
  }
  if (static_cast<int>(gains_.k1.rows()) != n) {
    throw ConfigError("gain size must match the state dimension", "gains.k1");
  }

  const bool use_expfilter = mre_.variant == Variant::ExponentialFilter;
  const bool use_ew = mre_.variant == Variant::ExponentialWeighting;
  const Layout lay(n, p, use_expfilter);

  const double h = eng_.h;
  const int stride = eng_.record_stride;
  const double stride_dt = stride * h;
  const std::int64_t steps = std::llround(eng_.t_end / h);

  Eigen::VectorXd x0 = eng_.x0.size() ? eng_.x0 : Eigen::VectorXd::Zero(n);
  Eigen::VectorXd xhat0 = eng_.xhat0.size() ? eng_.xhat0 : Eigen::VectorXd::Zero(n);
  if (static_cast<int>(x0.size()) != n || static_cast<int>(xhat0.size()) != n) {
    throw ConfigError("initial states must match the state dimension", "engine.x0");
  }

  // --- composite state ------------------------------------------------------
  Eigen::VectorXd y = Eigen::VectorXd::Zero(lay.total);
  y.segment(lay.x, n) = x0;
  y.segment(lay.xhat, n) = xhat0;
  y.segment(lay.th, p) = est_.theta_hat0;
  if (use_expfilter) {
    y.segment(lay.a, n) = mre_.filter.beta * x0;  // anchored auxiliary state
  }

  // --- regressor memory -----------------------------------------------------
  SampleBuffer buffer(model_, mre_.filter.window);
  HistoryStack stack(mre_.stack_capacity, mre_.lambda_admit);
  EwAggregator ew(n, p, mre_.ew_alpha);
  std::optional<double> T_excite;
  Eigen::VectorXd U_agg = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd Y_agg = Eigen::MatrixXd::Zero(p, p);

  // --- disturbance ----------------------------------------------------------
  const std::int64_t hold_steps =
      std::max<std::int64_t>(1, std::llround(dist_.hold_step / h));
  Eigen::VectorXd d_held = dist_.at_hold_index(0, n);

  // --- scheduling state -----------------------------------------------------
  const UubConstants uub =
      uub_constants(est_, est_.lambda_y, est_.k_xi, consts_.d_bar);
  double theta_bound = est_.initial_error_bound();

  SimTrace trace;
  trace.bound.current = theta_bound;

  auto lyapunov = [&](double t, const Eigen::VectorXd& ys) {
    return errors(ys.segment(lay.x, n), ys.segment(lay.xhat, n), traj_.value(t)).V;
  };

  // Budget snapping: phase boundaries live on the record grid so that the
  // switching sequence is an integer-step schedule (and therefore identical
  // under step-size refinement with a proportionally scaled stride).
  auto snap_up_steps = [&](double dur) {
    const auto k = static_cast<std::int64_t>(std::ceil(dur / stride_dt - 1e-9));
    return stride * std::max<std::int64_t>(1, k);
  };
  auto snap_down_steps = [&](double dur) {
    const auto k = static_cast<std::int64_t>(std::floor(dur / stride_dt + 1e-9));
    return stride * std::max<std::int64_t>(1, k);
  };

  const double V0 = lyapunov(0.0, y);
  if (V0 > consts_.V_u) {
    throw InfeasibleStart("initial Lyapunov value exceeds the ceiling V_u");
  }
  trace.max_V = V0;

  if (steps == 0) {
    trace.final_x = y.segment(lay.x, n);
    trace.final_xhat = y.segment(lay.xhat, n);
    trace.final_theta_hat = y.segment(lay.th, p);
    trace.final_theta_err = (model_.theta_true() - trace.final_theta_hat).norm();
    return trace;
  }

  Phase phase;
  phase.kind = PhaseKind::Available;
  phase.sigma = 0;
  phase.t_start = 0.0;
  std::int64_t phase_end_step = 0;
  {
    const double formula =
        V0 > 0.0 ? min_available_dwell(V0, consts_) : 0.0;
    const double budget = std::max(formula, eng_.available_floor);
    phase_end_step = snap_up_steps(budget);
    phase.budget = static_cast<double>(phase_end_step) * h;
    trace.switches.push_back(
        {phase.sigma, phase.kind, 0.0, V0, theta_bound, budget});
  }

  buffer.start_interval(0.0);

  // Pair pipeline: pushes the current composite state (with its ride-along
  // quadratures) into the sample buffer.
  auto push_sample = [&](double t, const Eigen::VectorXd& ys,
                         const Eigen::VectorXd& u) {
    buffer.push_integrated(t, ys.segment(lay.x, n), u,
                           model_.drift(t, ys.segment(lay.x, n)),
                           model_.regressor(t, ys.segment(lay.x, n)),
                           ys.segment(lay.int_fu, n),
                           unflatten(ys.segment(lay.int_Y, n * p), n, p),
                           ys.segment(lay.int_d, n));
  };

  auto control_at = [&](double t, const Eigen::VectorXd& ys,
                        std::optional<Eigen::VectorXd>* vr_out = nullptr) {
    const Eigen::VectorXd xh = ys.segment(lay.xhat, n);
    const Eigen::VectorXd e1 = ys.segment(lay.x, n) - xh;
    const Eigen::VectorXd e2 = xh - traj_.value(t);
    std::optional<Eigen::VectorXd> vr;
    if (phase.kind == PhaseKind::Available) {
      vr = sliding_term(e1, theta_bound, consts_.d_bar, consts_.Y_bar, gains_,
                        phase.kind);
    }
    Eigen::VectorXd u =
        control_input(model_, gains_, t, xh, traj_.rate(t), e2,
                      ys.segment(lay.th, p), phase.kind, vr);
    if (vr_out != nullptr) *vr_out = vr;
    return u;
  };

  push_sample(0.0, y, control_at(0.0, y));

  auto rhs = [&](double ts, const Eigen::VectorXd& ys) {
    Eigen::VectorXd dy = Eigen::VectorXd::Zero(lay.total);
    const Eigen::VectorXd x = ys.segment(lay.x, n);
    std::optional<Eigen::VectorXd> vr;
    const Eigen::VectorXd u = control_at(ts, ys, &vr);
    const Eigen::VectorXd fx = model_.drift(ts, x);
    const Eigen::MatrixXd Yx = model_.regressor(ts, x);
    dy.segment(lay.x, n) = fx + Yx * model_.theta_true() + u + d_held;
    dy.segment(lay.xhat, n) =
        observer_rate(model_, ts, ys.segment(lay.xhat, n), ys.segment(lay.th, p),
                      u, phase.kind, vr);
    dy.segment(lay.th, p) = theta_rate(est_, ys.segment(lay.th, p), U_agg, Y_agg,
                                       ts, T_excite, phase.kind);
    if (phase.kind == PhaseKind::Available) {
      dy.segment(lay.int_fu, n) = fx + u;
      dy.segment(lay.int_Y, n * p) = flatten(Yx);
      dy.segment(lay.int_d, n) = d_held;
      if (use_expfilter) {
        const double beta = mre_.filter.beta;
        dy.segment(lay.xf, n) = beta * (x - ys.segment(lay.xf, n));
        dy.segment(lay.wf, n) = beta * ((fx + u) - ys.segment(lay.wf, n));
        dy.segment(lay.Yf, n * p) = beta * (flatten(Yx) - ys.segment(lay.Yf, n * p));
        dy.segment(lay.df, n) = beta * (d_held - ys.segment(lay.df, n));
        dy.segment(lay.a, n) = -beta * ys.segment(lay.a, n);
      }
    }
    return dy;
  };

  auto current_pair = [&](double t) -> FilteredPair {
    if (use_expfilter) {
      ExpFilterState st;
      st.x_f = y.segment(lay.xf, n);
      st.w_f = y.segment(lay.wf, n);
      st.Y_f = unflatten(y.segment(lay.Yf, n * p), n, p);
      st.d_f = y.segment(lay.df, n);
      st.a = y.segment(lay.a, n);
      return exp_filter_pair(st, mre_.filter.beta, y.segment(lay.x, n), t);
    }
    return windowed_pair(buffer, t);
  };

  auto record = [&](double t) {
    TraceRecord r;
    r.t = t;
    r.x = y.segment(lay.x, n);
    r.xhat = y.segment(lay.xhat, n);
    r.xd = traj_.value(t);
    r.u = control_at(t, y);
    r.theta_hat = y.segment(lay.th, p);
    r.theta_tilde = model_.theta_true() - r.theta_hat;
    r.e1 = r.x - r.xhat;
    r.e2 = r.xhat - r.xd;
    r.V = 0.5 * r.e1.squaredNorm() + 0.5 * r.e2.squaredNorm();
    r.phase = phase.kind;
    r.sigma = phase.sigma;
    trace.records.push_back(std::move(r));
  };

  const double V_ceiling = consts_.V_u * (1.0 + 1e-3);

  for (std::int64_t step = 0; step <= steps; ++step) {
    const double t = static_cast<double>(step) * h;
    const bool boundary = (step % stride == 0);

    if (boundary) {
      // --- phase transition -------------------------------------------------
      if (step == phase_end_step && step < steps) {
        const double V_now = lyapunov(t, y);
        if (phase.kind == PhaseKind::Available) {
          // Fold the adaptation that ran since the excitation threshold into
          // the parameter-error bound, then certify the next denied budget.
          if (T_excite.has_value() && t > *T_excite) {
            theta_bound = propagate_bound(theta_bound, t - *T_excite, uub);
          }
          trace.bound.at_interval_end.push_back({phase.sigma, theta_bound});
          trace.bound.current = theta_bound;
          trace.agg_at_interval_end.push_back(
              {phase.sigma, t, U_agg, Y_agg,
               use_ew ? ew.lambda_min() : stack.lambda_min(), T_excite});
          const double certified = max_denied_dwell(V_now, theta_bound, consts_);
          const double commanded = certified * eng_.denied_budget_scale;
          if (commanded > certified + h + 1e-12) {
            throw SafetyViolation(
                "commanded denied budget exceeds the certified maximum", t);
          }
          phase.kind = PhaseKind::Denied;
          phase.t_start = t;
          phase_end_step =
              std::isfinite(commanded)
                  ? step + snap_down_steps(commanded)
                  : std::numeric_limits<std::int64_t>::max();
          phase.budget = std::isfinite(commanded)
                             ? static_cast<double>(phase_end_step - step) * h
                             : commanded;
          trace.denied_budgets.push_back({phase.sigma, certified});
          trace.switches.push_back(
              {phase.sigma, phase.kind, t, V_now, theta_bound, certified});
          buffer.set_phase(PhaseKind::Denied);
        } else {
          ++trace.completed_denied;
          phase.kind = PhaseKind::Available;
          phase.sigma += 1;
          phase.t_start = t;
          const double formula =
              V_now > 0.0 ? min_available_dwell(V_now, consts_) : 0.0;
          const double budget = std::max(formula, eng_.available_floor);
          phase_end_step = step + snap_up_steps(budget);
          phase.budget = static_cast<double>(phase_end_step - step) * h;
          trace.switches.push_back(
              {phase.sigma, phase.kind, t, V_now, theta_bound, budget});
          // Fresh identification interval: restart quadratures, memory and
          // excitation bookkeeping from this anchor.
          y.segment(lay.int_fu, n).setZero();
          y.segment(lay.int_Y, n * p).setZero();
          y.segment(lay.int_d, n).setZero();
          if (use_expfilter) {
            y.segment(lay.xf, n).setZero();
            y.segment(lay.wf, n).setZero();
            y.segment(lay.Yf, n * p).setZero();
            y.segment(lay.df, n).setZero();
            y.segment(lay.a, n) = mre_.filter.beta * y.segment(lay.x, n);
          }
          buffer.start_interval(t);
          stack.reset(t);
          ew.reset(t);
          T_excite.reset();
          U_agg.setZero();
          Y_agg.setZero();
          push_sample(t, y, control_at(t, y));
        }
      }

      // --- regressor admission / forgetting update ---------------------------
      if (phase.kind == PhaseKind::Available && t > buffer.anchor() + 1e-12) {
        const FilteredPair pair = current_pair(t);
        if (use_ew) {
          ew.update(pair, stride_dt);
          U_agg = ew.U_agg();
          Y_agg = ew.Y_agg();
          if (!T_excite.has_value()) T_excite = ew.excitation_time(est_.lambda_y);
        } else {
          if (stack.try_admit(pair)) {
            U_agg = stack.U_agg();
            Y_agg = stack.Y_agg();
          }
          if (!T_excite.has_value()) {
            T_excite = stack.excitation_time(est_.lambda_y);
          }
        }
      }

      record(t);
    }

    if (step == steps) break;

    // --- disturbance sample-and-hold ---------------------------------------
    if (step % hold_steps == 0) {
      d_held = dist_.at_hold_index(step / hold_steps, n);
    }

    y = rk4_step(rhs, t, y, h);

    const double t_next = static_cast<double>(step + 1) * h;
    const double V_next = lyapunov(t_next, y);
    trace.max_V = std::max(trace.max_V, V_next);
    if (V_next > V_ceiling) {
      throw SafetyViolation("Lyapunov value exceeded the certified ceiling",
                            t_next);
    }
    if (phase.kind == PhaseKind::Available) {
      push_sample(t_next, y, control_at(t_next, y));
    }
  }

  trace.bound.current = theta_bound;
  trace.final_x = y.segment(lay.x, n);
  trace.final_xhat = y.segment(lay.xhat, n);
  trace.final_theta_hat = y.segment(lay.th, p);
  trace.final_theta_err = (model_.theta_true() - trace.final_theta_hat).norm();
  return trace;
}

}  // namespace itrack
