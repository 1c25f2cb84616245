#pragma once

#include <Eigen/Dense>
#include <deque>

#include "itrack/dynamics.hpp"
#include "itrack/errors.hpp"
#include "itrack/types.hpp"

namespace itrack {

enum class FilterVariant { ExponentialFilter, WindowedIntegration };

struct FilterConfig {
  FilterVariant variant = FilterVariant::WindowedIntegration;
  double beta = 5.0;             // filter rate for the exponential variant
  double window = 0.25;          // integration window [s]
  double quadrature_step = 1e-3; // sample spacing the quadrature assumes
  void validate() const;
};

/// Regressor-side measurement pair: U ~ Y*theta + Xi, where Xi is the
/// disturbance-driven residual. Xi is diagnostic only — it requires knowing d,
/// so outside the simulation engine it is simply zero.
struct FilteredPair {
  double t = 0.0;
  Eigen::VectorXd U;   // n
  Eigen::MatrixXd Y;   // n x p
  Eigen::VectorXd Xi;  // n, diagnostic

  static FilteredPair zero(int n, int p, double t);
};

/// Ring buffer of measured samples for one feedback-available interval,
/// carrying running integrals of (f+u), Y and d from the interval anchor so
/// that windowed quantities are differences of stored values.
///
/// Two feeding modes share the same storage:
///  - push(t, x, u): f and Y are evaluated here and the running integrals are
///    extended by the trapezoid rule (standalone use);
///  - push_integrated(...): the caller supplies the integral values directly
///    (the engine integrates them alongside the state, so the buffer sees
///    quadrature consistent with the trajectory to integrator accuracy).
class SampleBuffer {
 public:
  /// slack < 0 selects the default retention slack (window + 5 ms); the buffer
  /// keeps samples covering [t - window - slack, t], enough for the windowed
  /// difference quantities which reach back two windows.
  SampleBuffer(const SystemModel& model, double window, double slack = -1.0);

  /// Clears all samples and starts a new interval anchored at t_anchor. The
  /// first subsequent push must be at exactly the anchor time.
  void start_interval(double t_anchor);

  void set_phase(PhaseKind k) { phase_ = k; }
  PhaseKind phase() const { return phase_; }

  void push(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u);
  void push_integrated(double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& f,
                       const Eigen::MatrixXd& Y, const Eigen::VectorXd& int_fu,
                       const Eigen::MatrixXd& int_Y,
                       const Eigen::VectorXd& int_d);

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  double anchor() const { return anchor_; }
  double window() const { return window_; }
  double first_time() const;
  double last_time() const;
  int state_dim() const { return n_; }
  int param_dim() const { return p_; }

  /// Linearly interpolated queries (exact at stored sample times). Throw
  /// NotWarmError when s lies outside the retained span.
  Eigen::VectorXd x_at(double s) const;
  Eigen::VectorXd int_fu_at(double s) const;
  Eigen::MatrixXd int_Y_at(double s) const;
  Eigen::VectorXd int_d_at(double s) const;

 private:
  struct Entry {
    double t;
    Eigen::VectorXd x, u, f;
    Eigen::MatrixXd Y;
    Eigen::VectorXd int_fu;  // integral of f+u over [anchor, t]
    Eigen::MatrixXd int_Y;   // integral of Y
    Eigen::VectorXd int_d;   // integral of d (zero unless fed by the engine)
  };

  void append(Entry e);
  std::size_t find_leq(double s) const;

  const SystemModel& model_;
  double window_;
  double slack_;
  double anchor_ = 0.0;
  PhaseKind phase_ = PhaseKind::Available;
  int n_, p_;
  std::deque<Entry> entries_;
};

/// Windowed-integration pair at time t.
///
/// With K(s) the running integrals from the anchor and
/// I(s) = K(s) - K(max(s - window, anchor)):
///   t within the first window:  U = x(t) - x(anchor) - K_fu(t), Y = K_Y(t)
///   afterwards:                 U = I_u(t) - I_u(t - window), likewise for Y,
/// where I_u(s) = x(s) - x(s_minus) - integral of (f+u) over the truncated
/// window. Returns an exact zero pair while the buffer is in the Denied phase.
FilteredPair windowed_pair(const SampleBuffer& buf, double t);

/// State of the exponential (convolution) filter, written so its evolution is
/// a plain ODE the engine can integrate with everything else:
///   x_f' = beta (x - x_f)        w_f' = beta ((f+u) - w_f)
///   Y_f' = beta (Y - Y_f)        d_f' = beta (d - d_f)
///   a'   = -beta a,  a(anchor) = beta x(anchor)
/// and the pair is read out by parts: U = beta (x - x_f) - a - w_f.
struct ExpFilterState {
  Eigen::VectorXd x_f, w_f, d_f, a;
  Eigen::MatrixXd Y_f;
  static ExpFilterState zero(int n, int p);
};

ExpFilterState exp_filter_rate(const ExpFilterState& s, double beta,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd& fu,
                               const Eigen::MatrixXd& Y,
                               const Eigen::VectorXd& d);

FilteredPair exp_filter_pair(const ExpFilterState& s, double beta,
                             const Eigen::VectorXd& x, double t);

/// Self-stepping wrapper around ExpFilterState for standalone use: advances
/// the filter ODEs with Heun steps between pushed samples and returns the
/// current pair. Resets at each interval anchor; returns exact zeros while
/// Denied.
class ExponentialFilter {
 public:
  ExponentialFilter(const SystemModel& model, double beta);

  void start_interval(double t_anchor, const Eigen::VectorXd& x_anchor);
  void set_phase(PhaseKind k) { phase_ = k; }
  PhaseKind phase() const { return phase_; }

  /// Advance to time t with the new sample (x, u) and return the pair at t.
  /// d is diagnostic; pass empty to treat it as zero.
  FilteredPair advance(double t, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u,
                       const Eigen::VectorXd& d = Eigen::VectorXd());

 private:
  const SystemModel& model_;
  double beta_;
  PhaseKind phase_ = PhaseKind::Available;
  bool started_ = false;
  double last_t_ = 0.0;
  Eigen::VectorXd last_x_, last_fu_, last_d_;
  Eigen::MatrixXd last_Y_;
  ExpFilterState state_;
};

}  // namespace itrack
