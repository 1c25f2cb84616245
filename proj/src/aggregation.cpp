#include "itrack/aggregation.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace itrack {

double min_eigenvalue(const Eigen::MatrixXd& sym) {
  if (sym.rows() != sym.cols() || sym.rows() == 0) {
    throw InvalidInput("min_eigenvalue: matrix must be square and non-empty");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (sym + sym.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Aggregates aggregate(const std::vector<StackEntry>& entries, int p) {
  Aggregates out;
  out.U = Eigen::VectorXd::Zero(p);
  out.Y = Eigen::MatrixXd::Zero(p, p);
  out.Xi = Eigen::VectorXd::Zero(p);
  for (const StackEntry& e : entries) {
    const double norm = 1.0 + e.Y.squaredNorm();
    out.U += e.Y.transpose() * e.U / norm;
    out.Y += e.Y.transpose() * e.Y / norm;
    out.Xi += e.Y.transpose() * e.Xi / norm;
  }
  return out;
}

// ---- HistoryStack -----------------------------------------------------------

HistoryStack::HistoryStack(int capacity, double lambda_admit)
    : capacity_(capacity), lambda_admit_(lambda_admit) {
  if (capacity < 1) {
    throw InvalidInput("HistoryStack: capacity must be >= 1");
  }
  if (!(lambda_admit >= 0.0) || !std::isfinite(lambda_admit)) {
    throw InvalidInput("HistoryStack: lambda_admit must be finite and >= 0");
  }
}

void HistoryStack::reset(double t_anchor) {
  (void)t_anchor;
  entries_.clear();
  pending_.clear();
  lambda_history_.clear();
  agg_ = Aggregates{};
  lambda_min_ = 0.0;
  n_ = p_ = 0;
}

bool HistoryStack::try_admit(const FilteredPair& pair) {
  if (pair.U.size() == 0 || pair.Y.size() == 0) {
    throw InvalidInput("HistoryStack: empty pair");
  }
  if (n_ == 0) {
    n_ = static_cast<int>(pair.U.size());
    p_ = static_cast<int>(pair.Y.cols());
    agg_.U = Eigen::VectorXd::Zero(p_);
    agg_.Y = Eigen::MatrixXd::Zero(p_, p_);
    agg_.Xi = Eigen::VectorXd::Zero(p_);
  }
  if (pair.U.size() != n_ || pair.Y.rows() != n_ || pair.Y.cols() != p_) {
    throw InvalidInput("HistoryStack: pair dimension mismatch");
  }
  if (pair.Y.isZero(0.0) && pair.U.isZero(0.0)) {
    return false;  // zero summand can never raise lambda_min
  }

  pending_.push_back(StackEntry{pair.t, pair.U, pair.Y,
                                pair.Xi.size() == n_
                                    ? pair.Xi
                                    : Eigen::VectorXd::Zero(n_)});
  if (pending_.size() > kPendingCap) pending_.pop_front();

  // Candidate = committed entries + everything pending, trimmed greedily to
  // capacity (drop whichever entry's removal leaves the largest lambda_min;
  // oldest first on ties).
  std::vector<StackEntry> cand = entries_;
  cand.insert(cand.end(), pending_.begin(), pending_.end());
  while (static_cast<int>(cand.size()) > capacity_) {
    std::size_t drop = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cand.size(); ++i) {
      std::vector<StackEntry> trial;
      trial.reserve(cand.size() - 1);
      for (std::size_t j = 0; j < cand.size(); ++j) {
        if (j != i) trial.push_back(cand[j]);
      }
      const double lam = min_eigenvalue(aggregate(trial, p_).Y);
      const bool better =
          lam > best + 1e-15 ||
          (std::abs(lam - best) <= 1e-15 && cand[i].t < cand[drop].t);
      if (i == 0 || better) {
        best = lam;
        drop = i;
      }
    }
    cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(drop));
  }

  const Aggregates cand_agg = aggregate(cand, p_);
  const double cand_lambda = min_eigenvalue(cand_agg.Y);
  if (cand_lambda - lambda_min_ > lambda_admit_) {
    entries_ = std::move(cand);
    pending_.clear();
    agg_ = cand_agg;
    lambda_min_ = cand_lambda;
    lambda_history_.emplace_back(pair.t, lambda_min_);
    return true;
  }
  return false;
}

std::optional<double> HistoryStack::excitation_time(double lambda_y) const {
  for (const auto& [t, lam] : lambda_history_) {
    if (lam > lambda_y) return t;
  }
  return std::nullopt;
}

void HistoryStack::dump(std::ostream& os) const {
  for (const StackEntry& e : entries_) {
    os << e.t;
    for (int i = 0; i < e.U.size(); ++i) os << ',' << e.U(i);
    for (int r = 0; r < e.Y.rows(); ++r) {
      for (int c = 0; c < e.Y.cols(); ++c) os << ',' << e.Y(r, c);
    }
    os << '\n';
  }
}

// ---- EwAggregator -----------------------------------------------------------

EwAggregator::EwAggregator(int n, int p, double alpha)
    : alpha_(alpha), n_(n), p_(p) {
  if (n < 1 || p < 1) {
    throw InvalidInput("EwAggregator: dimensions must be positive");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidInput("EwAggregator: alpha must be finite and >= 0");
  }
  reset(0.0);
}

void EwAggregator::reset(double) {
  U_ = Eigen::VectorXd::Zero(p_);
  Xi_ = Eigen::VectorXd::Zero(p_);
  Y_ = Eigen::MatrixXd::Zero(p_, p_);
  gU_prev_ = Eigen::VectorXd::Zero(p_);
  gXi_prev_ = Eigen::VectorXd::Zero(p_);
  gY_prev_ = Eigen::MatrixXd::Zero(p_, p_);
  has_prev_ = false;
  lambda_min_ = 0.0;
  lambda_history_.clear();
}

void EwAggregator::update(const FilteredPair& pair, double dt) {
  if (pair.U.size() != n_ || pair.Y.rows() != n_ || pair.Y.cols() != p_) {
    throw InvalidInput("EwAggregator: pair dimension mismatch");
  }
  if (!(dt >= 0.0) || !std::isfinite(dt)) {
    throw InvalidInput("EwAggregator: dt must be finite and >= 0");
  }
  const double norm = 1.0 + pair.Y.squaredNorm();
  const Eigen::VectorXd gU = pair.Y.transpose() * pair.U / norm;
  const Eigen::MatrixXd gY = pair.Y.transpose() * pair.Y / norm;
  const Eigen::VectorXd gXi =
      pair.Xi.size() == n_ ? Eigen::VectorXd(pair.Y.transpose() * pair.Xi / norm)
                           : Eigen::VectorXd::Zero(p_);
  if (dt > 0.0) {
    const double w = std::exp(-alpha_ * dt);
    U_ = w * U_ + 0.5 * dt * (w * gU_prev_ + gU);
    Y_ = w * Y_ + 0.5 * dt * (w * gY_prev_ + gY);
    Xi_ = w * Xi_ + 0.5 * dt * (w * gXi_prev_ + gXi);
  }
  gU_prev_ = gU;
  gY_prev_ = gY;
  gXi_prev_ = gXi;
  has_prev_ = true;
  lambda_min_ = min_eigenvalue(Y_);
  lambda_history_.emplace_back(pair.t, lambda_min_);
}

std::optional<double> EwAggregator::excitation_time(double lambda_y) const {
  for (const auto& [t, lam] : lambda_history_) {
    if (lam > lambda_y) return t;
  }
  return std::nullopt;
}

}  // namespace itrack
