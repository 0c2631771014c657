#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "mpm/market.hpp"

namespace mpm {

/// Tolerance for the x != 0 test and for constraint checks on solver output.
inline constexpr double kTol = 1e-9;

/// Dense row-major m x n matrix of task proportions.
class MatchMatrix {
public:
  MatchMatrix() = default;
  MatchMatrix(std::size_t m, std::size_t n) : m_(m), n_(n), x_(m * n, 0.0) {}

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  bool empty() const { return x_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return x_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return x_[i * n_ + j]; }

  const std::vector<double>& values() const { return x_; }
  std::vector<double>& values() { return x_; }

  double row_sum(std::size_t i) const {
    double acc = 0;
    for (std::size_t j = 0; j < n_; ++j) acc += (*this)(i, j);
    return acc;
  }

  std::size_t nonzeros() const {
    std::size_t k = 0;
    for (double v : x_)
      if (std::abs(v) > kTol) ++k;
    return k;
  }

  bool operator==(const MatchMatrix&) const = default;

private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<double> x_;
};

struct PairEvaluation {
  double t = 0;  // task delay (s)
  double E = 0;  // collaborator energy (J)
  double sps1 = 0, sps2 = 0, sps3 = 0;
  double rps1 = 0, rps2 = 0, rps3 = 0;
  double sps = 0;
  double rps = 0;
};

struct SatisfactionSummary {
  double ars = 0;
  double acs = 0;
  double objective = 0;
};

inline bool is_assigned(double x) { return std::abs(x) > kTol; }

/// Seconds of transmission plus computation for proportion x of the task.
inline double task_delay(const Requirement& req, const ServiceOffer& svc, double x) {
  return x * req.s / svc.r + x * req.Q / svc.f;
}

/// Joules spent by the collaborator receiving and executing proportion x.
inline double energy(const Requirement& req, const ServiceOffer& svc, double x) {
  return svc.e_com * x * req.s / svc.r + svc.e_exe * x * req.Q / svc.f;
}

namespace detail {

// (1 - value/limit) on value <= limit, else 0. The comparison admits a
// relative kTol so that x sitting exactly on its delay/energy cap is not lost
// to rounding in the delay product.
inline double headroom_score(double value, double limit) {
  if (value > limit * (1 + kTol)) return 0.0;
  return std::max(0.0, 1.0 - value / limit);
}

}  // namespace detail

inline PairEvaluation evaluate_pair(const Requirement& req, const ServiceOffer& svc,
                                    double x, const PreferenceWeights& w) {
  PairEvaluation e;
  e.t = task_delay(req, svc, x);
  e.E = energy(req, svc, x);

  e.sps1 = detail::headroom_score(e.t, req.tau);
  e.sps2 = svc.op <= req.bp ? std::exp(svc.op - req.bp) : 0.0;
  e.sps3 = svc.rep_c;

  e.rps1 = detail::headroom_score(e.E, svc.eps);
  e.rps2 = req.bp >= svc.op ? std::exp(-svc.op / req.bp) : 0.0;
  e.rps3 = req.rep_r;

  if (is_assigned(x)) {
    e.sps = w.phi[0] * e.sps1 + w.phi[1] * e.sps2 + w.phi[2] * e.sps3;
    e.rps = w.psi[0] * e.rps1 + w.psi[1] * e.rps2 + w.psi[2] * e.rps3;
  }
  return e;
}

/// ARS, ACS and the weighted objective of a match matrix. Averages over an
/// empty side are 0.
inline SatisfactionSummary satisfaction(const MarketInstance& inst, const MatchMatrix& X) {
  const std::size_t m = inst.m(), n = inst.n();
  if (X.rows() != m || X.cols() != n)
    throw std::invalid_argument("match matrix shape does not match instance");

  const PreferenceWeights& w = inst.config.weights;
  double req_total = 0, col_total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = X(i, j);
      if (!is_assigned(x)) continue;
      const PairEvaluation e = evaluate_pair(inst.requirements[i], inst.services[j], x, w);
      req_total += e.sps * x;
      col_total += e.rps * x;
    }
  }

  SatisfactionSummary out;
  out.ars = m == 0 ? 0.0 : req_total / static_cast<double>(m);
  out.acs = n == 0 ? 0.0 : col_total / static_cast<double>(n);
  out.objective = w.w1 * out.ars + w.w2 * out.acs;
  return out;
}

}  // namespace mpm
