#include "itrack/signals.hpp"

#include <algorithm>
#include <cmath>

namespace itrack {

namespace {
constexpr double kTimeTol = 1e-12;
}

// ---- FilterConfig -----------------------------------------------------------

void FilterConfig::validate() const {
  if (!(window > 0.0) || !std::isfinite(window)) {
    throw InvalidInput("FilterConfig: window must be finite and > 0");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidInput("FilterConfig: beta must be finite and > 0");
  }
  if (!(quadrature_step > 0.0) || !(quadrature_step <= window / 4.0)) {
    throw InvalidInput("FilterConfig: quadrature_step must be in (0, window/4]");
  }
}

// ---- FilteredPair -----------------------------------------------------------

FilteredPair FilteredPair::zero(int n, int p, double t) {
  FilteredPair out;
  out.t = t;
  out.U = Eigen::VectorXd::Zero(n);
  out.Y = Eigen::MatrixXd::Zero(n, p);
  out.Xi = Eigen::VectorXd::Zero(n);
  return out;
}

// ---- SampleBuffer -----------------------------------------------------------

SampleBuffer::SampleBuffer(const SystemModel& model, double window, double slack)
    : model_(model),
      window_(window),
      slack_(slack < 0.0 ? window + 5e-3 : slack),
      n_(model.state_dim()),
      p_(model.param_dim()) {
  if (!(window_ > 0.0) || !std::isfinite(window_)) {
    throw InvalidInput("SampleBuffer: window must be finite and > 0");
  }
}

void SampleBuffer::start_interval(double t_anchor) {
  if (!std::isfinite(t_anchor)) {
    throw InvalidInput("SampleBuffer: non-finite anchor time");
  }
  entries_.clear();
  anchor_ = t_anchor;
  phase_ = PhaseKind::Available;
}

void SampleBuffer::append(Entry e) {
  if (!entries_.empty() && !(e.t > entries_.back().t)) {
    throw OrderingError("SampleBuffer: timestamps must be strictly increasing");
  }
  if (entries_.empty() && std::abs(e.t - anchor_) > 1e-9) {
    throw InvalidInput("SampleBuffer: first sample must land on the anchor");
  }
  entries_.push_back(std::move(e));
  // Evict entries no query can still need, keeping one sample at or before the
  // retention horizon so interpolation at the horizon stays bracketed.
  const double horizon = entries_.back().t - window_ - slack_;
  while (entries_.size() >= 2 && entries_[1].t <= horizon) {
    entries_.pop_front();
  }
}

void SampleBuffer::push(double t, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u) {
  if (x.size() != n_ || u.size() != n_) {
    throw InvalidInput("SampleBuffer: sample dimension mismatch");
  }
  if (!x.allFinite() || !u.allFinite() || !std::isfinite(t)) {
    throw InvalidInput("SampleBuffer: non-finite sample");
  }
  Entry e;
  e.t = t;
  e.x = x;
  e.u = u;
  e.f = model_.drift(t, x);
  e.Y = model_.regressor(t, x);
  if (entries_.empty()) {
    e.int_fu = Eigen::VectorXd::Zero(n_);
    e.int_Y = Eigen::MatrixXd::Zero(n_, p_);
    e.int_d = Eigen::VectorXd::Zero(n_);
  } else {
    const Entry& prev = entries_.back();
    const double dt = t - prev.t;
    e.int_fu = prev.int_fu + 0.5 * dt * ((prev.f + prev.u) + (e.f + e.u));
    e.int_Y = prev.int_Y + 0.5 * dt * (prev.Y + e.Y);
    e.int_d = prev.int_d;  // d unknown on this path; Xi stays zero
  }
  append(std::move(e));
}

void SampleBuffer::push_integrated(double t, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& f,
                                   const Eigen::MatrixXd& Y,
                                   const Eigen::VectorXd& int_fu,
                                   const Eigen::MatrixXd& int_Y,
                                   const Eigen::VectorXd& int_d) {
  if (x.size() != n_ || u.size() != n_ || f.size() != n_ ||
      Y.rows() != n_ || Y.cols() != p_ || int_fu.size() != n_ ||
      int_Y.rows() != n_ || int_Y.cols() != p_ || int_d.size() != n_) {
    throw InvalidInput("SampleBuffer: sample dimension mismatch");
  }
  Entry e{t, x, u, f, Y, int_fu, int_Y, int_d};
  append(std::move(e));
}

double SampleBuffer::first_time() const {
  if (entries_.empty()) throw NotWarmError("SampleBuffer: empty");
  return entries_.front().t;
}

double SampleBuffer::last_time() const {
  if (entries_.empty()) throw NotWarmError("SampleBuffer: empty");
  return entries_.back().t;
}

std::size_t SampleBuffer::find_leq(double s) const {
  if (entries_.empty() || s < entries_.front().t - kTimeTol ||
      s > entries_.back().t + kTimeTol) {
    throw NotWarmError("SampleBuffer: query at t=" + std::to_string(s) +
                       " outside retained span");
  }
  auto it = std::upper_bound(
      entries_.begin(), entries_.end(), s,
      [](double v, const Entry& e) { return v < e.t; });
  if (it == entries_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(entries_.begin(), it)) - 1;
}

// Exact endpoint hits return the stored values untouched so engine-fed
// integrals keep full precision; interior queries interpolate linearly.
Eigen::VectorXd SampleBuffer::x_at(double s) const {
  const std::size_t i = find_leq(s);
  const Entry& lo = entries_[i];
  if (std::abs(s - lo.t) <= kTimeTol || i + 1 == entries_.size()) return lo.x;
  const Entry& hi = entries_[i + 1];
  const double w = (s - lo.t) / (hi.t - lo.t);
  return lo.x + w * (hi.x - lo.x);
}

Eigen::VectorXd SampleBuffer::int_fu_at(double s) const {
  const std::size_t i = find_leq(s);
  const Entry& lo = entries_[i];
  if (std::abs(s - lo.t) <= kTimeTol || i + 1 == entries_.size()) return lo.int_fu;
  const Entry& hi = entries_[i + 1];
  const double w = (s - lo.t) / (hi.t - lo.t);
  return lo.int_fu + w * (hi.int_fu - lo.int_fu);
}

Eigen::MatrixXd SampleBuffer::int_Y_at(double s) const {
  const std::size_t i = find_leq(s);
  const Entry& lo = entries_[i];
  if (std::abs(s - lo.t) <= kTimeTol || i + 1 == entries_.size()) return lo.int_Y;
  const Entry& hi = entries_[i + 1];
  const double w = (s - lo.t) / (hi.t - lo.t);
  return lo.int_Y + w * (hi.int_Y - lo.int_Y);
}

Eigen::VectorXd SampleBuffer::int_d_at(double s) const {
  const std::size_t i = find_leq(s);
  const Entry& lo = entries_[i];
  if (std::abs(s - lo.t) <= kTimeTol || i + 1 == entries_.size()) return lo.int_d;
  const Entry& hi = entries_[i + 1];
  const double w = (s - lo.t) / (hi.t - lo.t);
  return lo.int_d + w * (hi.int_d - lo.int_d);
}

// ---- windowed_pair ----------------------------------------------------------

FilteredPair windowed_pair(const SampleBuffer& buf, double t) {
  const int n = buf.state_dim();
  const int p = buf.param_dim();
  if (buf.phase() == PhaseKind::Denied) return FilteredPair::zero(n, p, t);
  if (buf.empty()) {
    throw NotWarmError("windowed_pair: buffer has no samples");
  }
  const double ta = buf.anchor();
  if (!(t > ta)) {
    throw InvalidInput("windowed_pair: t must exceed the interval anchor");
  }

  FilteredPair out;
  out.t = t;
  const double w = buf.window();
  if (t - ta <= w + kTimeTol) {
    out.U = buf.x_at(t) - buf.x_at(ta) - buf.int_fu_at(t);
    out.Y = buf.int_Y_at(t);
    out.Xi = buf.int_d_at(t);
    return out;
  }
  // I(s) = K(s) - K(max(s - w, anchor)); pair value is I(t) - I(t - w).
  // In the three-point combination the anchor-state term of K cancels
  // (coefficients 1, -2, 1), so only samples in [t - 2w, t] are touched and
  // the anchor entry itself may already be evicted.
  auto K_u = [&](double s) -> Eigen::VectorXd {
    return buf.x_at(s) - buf.int_fu_at(s);
  };
  const double s1 = t - w;
  const double s0 = std::max(s1 - w, ta);
  out.U = K_u(t) - 2.0 * K_u(s1) + K_u(s0);
  out.Y = buf.int_Y_at(t) - 2.0 * buf.int_Y_at(s1) + buf.int_Y_at(s0);
  out.Xi = buf.int_d_at(t) - 2.0 * buf.int_d_at(s1) + buf.int_d_at(s0);
  return out;
}

// ---- exponential filter -----------------------------------------------------

ExpFilterState ExpFilterState::zero(int n, int p) {
  ExpFilterState s;
  s.x_f = Eigen::VectorXd::Zero(n);
  s.w_f = Eigen::VectorXd::Zero(n);
  s.d_f = Eigen::VectorXd::Zero(n);
  s.a = Eigen::VectorXd::Zero(n);
  s.Y_f = Eigen::MatrixXd::Zero(n, p);
  return s;
}

ExpFilterState exp_filter_rate(const ExpFilterState& s, double beta,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd& fu,
                               const Eigen::MatrixXd& Y,
                               const Eigen::VectorXd& d) {
  ExpFilterState r;
  r.x_f = beta * (x - s.x_f);
  r.w_f = beta * (fu - s.w_f);
  r.Y_f = beta * (Y - s.Y_f);
  r.d_f = beta * (d - s.d_f);
  r.a = -beta * s.a;
  return r;
}

FilteredPair exp_filter_pair(const ExpFilterState& s, double beta,
                             const Eigen::VectorXd& x, double t) {
  FilteredPair out;
  out.t = t;
  out.U = beta * (x - s.x_f) - s.a - s.w_f;
  out.Y = s.Y_f;
  out.Xi = s.d_f;
  return out;
}

ExponentialFilter::ExponentialFilter(const SystemModel& model, double beta)
    : model_(model), beta_(beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidInput("ExponentialFilter: beta must be finite and > 0");
  }
}

void ExponentialFilter::start_interval(double t_anchor,
                                       const Eigen::VectorXd& x_anchor) {
  const int n = model_.state_dim();
  if (x_anchor.size() != n || !x_anchor.allFinite()) {
    throw InvalidInput("ExponentialFilter: bad anchor state");
  }
  state_ = ExpFilterState::zero(n, model_.param_dim());
  state_.a = beta_ * x_anchor;
  started_ = true;
  phase_ = PhaseKind::Available;
  last_t_ = t_anchor;
  last_x_ = x_anchor;
  last_fu_ = model_.drift(t_anchor, x_anchor);  // u at the anchor unknown: first
                                                // advance() replaces this below
  last_Y_ = model_.regressor(t_anchor, x_anchor);
  last_d_ = Eigen::VectorXd::Zero(n);
}

FilteredPair ExponentialFilter::advance(double t, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& d) {
  const int n = model_.state_dim();
  const int p = model_.param_dim();
  if (!started_) {
    throw NotWarmError("ExponentialFilter: start_interval() not called");
  }
  if (phase_ == PhaseKind::Denied) return FilteredPair::zero(n, p, t);
  if (x.size() != n || u.size() != n) {
    throw InvalidInput("ExponentialFilter: sample dimension mismatch");
  }
  const Eigen::VectorXd d_now =
      d.size() == 0 ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(d);
  if (d_now.size() != n) {
    throw InvalidInput("ExponentialFilter: disturbance dimension mismatch");
  }
  const double dt = t - last_t_;
  if (dt < 0.0) {
    throw OrderingError("ExponentialFilter: time must not decrease");
  }
  const Eigen::VectorXd fu_now = model_.drift(t, x) + u;
  const Eigen::MatrixXd Y_now = model_.regressor(t, x);
  if (dt > 0.0) {
    // Heun step of the filter ODEs, treating the inputs as their sampled
    // endpoint values (second-order, matching the trapezoid quadrature used
    // elsewhere).
    const ExpFilterState k1 =
        exp_filter_rate(state_, beta_, last_x_, last_fu_, last_Y_, last_d_);
    ExpFilterState mid;
    mid.x_f = state_.x_f + dt * k1.x_f;
    mid.w_f = state_.w_f + dt * k1.w_f;
    mid.Y_f = state_.Y_f + dt * k1.Y_f;
    mid.d_f = state_.d_f + dt * k1.d_f;
    mid.a = state_.a + dt * k1.a;
    const ExpFilterState k2 = exp_filter_rate(mid, beta_, x, fu_now, Y_now, d_now);
    state_.x_f += 0.5 * dt * (k1.x_f + k2.x_f);
    state_.w_f += 0.5 * dt * (k1.w_f + k2.w_f);
    state_.Y_f += 0.5 * dt * (k1.Y_f + k2.Y_f);
    state_.d_f += 0.5 * dt * (k1.d_f + k2.d_f);
    state_.a += 0.5 * dt * (k1.a + k2.a);
  }
  last_t_ = t;
  last_x_ = x;
  last_fu_ = fu_now;
  last_Y_ = Y_now;
  last_d_ = d_now;
  return exp_filter_pair(state_, beta_, x, t);
}

}  // namespace itrack
