#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mpm/errors.hpp"
#include "mpm/market.hpp"
#include "mpm/scoring.hpp"

namespace mpm {

struct SolverConfig {
  int max_iterations = 10000;
  /// Absolute duality gap on the objective at which the solve stops.
  double tolerance = 1e-6;
  int oracle_grid_steps = 10;

  bool operator==(const SolverConfig&) const = default;
};

inline void validate(const SolverConfig& cfg) {
  if (cfg.max_iterations < 1) throw ConfigError("solver max_iterations must be >= 1");
  if (!(cfg.tolerance > 0)) throw ConfigError("solver tolerance must be > 0");
  if (cfg.oracle_grid_steps < 2) throw ConfigError("oracle_grid_steps must be >= 2");
}

/// Separable concave QP
///
///   max  sum_ij (a_ij - b_ij x_ij) x_ij
///   s.t. 0 <= x_ij <= u_ij,  sum_j x_ij <= 1,  sum_i size_i x_ij <= capacity_j
///
/// stored row-major.
struct QpProblem {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> a, b, u;
  std::vector<double> size;      // s_i, one per row
  std::vector<double> capacity;  // C_j, one per column

  std::size_t at(std::size_t i, std::size_t j) const { return i * n + j; }

  double value(const MatchMatrix& X) const {
    double acc = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double x = X.values()[k];
      acc += (a[k] - b[k] * x) * x;
    }
    return acc;
  }
};

/// Largest proportion of `req` that `svc` can take while keeping both the
/// delay and the energy indicator active.
inline double pair_upper_bound(const Requirement& req, const ServiceOffer& svc) {
  const double delay_per_unit = task_delay(req, svc, 1.0);
  const double energy_per_unit = energy(req, svc, 1.0);
  double u = 1.0;
  if (delay_per_unit > 0) u = std::min(u, req.tau / delay_per_unit);
  if (energy_per_unit > 0) u = std::min(u, svc.eps / energy_per_unit);
  return u;
}

/// Expands w1*ARS + w2*ACS over the region x_ij <= u_ij, where only the delay
/// and energy components depend on x (both affine, decreasing).
inline QpProblem build_qp(const MarketInstance& inst) {
  QpProblem qp;
  qp.m = inst.m();
  qp.n = inst.n();
  qp.a.assign(qp.m * qp.n, 0.0);
  qp.b.assign(qp.m * qp.n, 0.0);
  qp.u.assign(qp.m * qp.n, 0.0);
  for (const auto& q : inst.requirements) qp.size.push_back(q.s);
  for (const auto& v : inst.services) qp.capacity.push_back(v.C);
  if (qp.m == 0 || qp.n == 0) return qp;

  const PreferenceWeights& w = inst.config.weights;
  const double req_scale = w.w1 / static_cast<double>(qp.m);
  const double col_scale = w.w2 / static_cast<double>(qp.n);

  for (std::size_t i = 0; i < qp.m; ++i) {
    const Requirement& req = inst.requirements[i];
    for (std::size_t j = 0; j < qp.n; ++j) {
      const ServiceOffer& svc = inst.services[j];
      // Price and reputation components do not depend on x; x = 1 is any
      // nonzero proportion.
      const PairEvaluation fixed = evaluate_pair(req, svc, 1.0, w);
      const double sps_const = w.phi[0] + w.phi[1] * fixed.sps2 + w.phi[2] * fixed.sps3;
      const double rps_const = w.psi[0] + w.psi[1] * fixed.rps2 + w.psi[2] * fixed.rps3;
      const double delay_slope = task_delay(req, svc, 1.0) / req.tau;
      const double energy_slope = energy(req, svc, 1.0) / svc.eps;

      const std::size_t k = qp.at(i, j);
      qp.a[k] = req_scale * sps_const + col_scale * rps_const;
      qp.b[k] = req_scale * w.phi[0] * delay_slope + col_scale * w.psi[0] * energy_slope;
      qp.u[k] = pair_upper_bound(req, svc);
    }
  }
  return qp;
}

struct SolveResult {
  MatchMatrix x;
  /// QP objective of `x`.
  double objective = 0;
  /// Lagrangian dual bound; the restricted optimum lies in [objective, upper_bound].
  double upper_bound = 0;
  bool converged = true;
  int iterations = 0;
  /// Best feasible objective after each sweep (nondecreasing).
  std::vector<double> objective_trace;
  /// Dual bound after each sweep (nonincreasing up to rounding).
  std::vector<double> bound_trace;
};

namespace detail {

// One variable of a block subproblem: x(lam) = argmax_{0<=x<=u} (c - lam*w) x - b x^2.
struct BlockTerm {
  double c = 0, w = 0, b = 0, u = 0;
};

inline double block_x(double c, double b, double u) {
  if (c <= 0 || u <= 0) return 0.0;
  if (b <= 0) return u;
  return std::min(u, c / (2 * b));
}

// max_{0<=x<=u} c x - b x^2
inline double block_value(double c, double b, double u) {
  const double x = block_x(c, b, u);
  return (c - b * x) * x;
}

struct BlockEvent {
  double at;
  double slope_change;
  double drop;
};

// Smallest lam >= 0 with sum_k w_k x_k(lam) <= target, which is the exact
// minimizer of the dual restricted to this multiplier. The sum is piecewise
// linear and nonincreasing in lam; terms with b = 0 contribute a step.
inline double solve_multiplier(std::span<const BlockTerm> terms, double target,
                               std::vector<BlockEvent>& events) {
  double load = 0;
  for (const auto& t : terms) load += t.w * block_x(t.c, t.b, t.u);
  if (load <= target) return 0.0;

  events.clear();
  double slope = 0;
  for (const auto& t : terms) {
    if (t.c <= 0 || t.u <= 0 || t.w <= 0) continue;
    const double zero_at = t.c / t.w;
    if (t.b <= 0) {
      events.push_back({zero_at, 0.0, t.w * t.u});
      continue;
    }
    const double rate = t.w * t.w / (2 * t.b);
    const double cap_until = (t.c - 2 * t.b * t.u) / t.w;
    if (cap_until > 0) {
      events.push_back({cap_until, -rate, 0.0});
    } else {
      slope -= rate;
    }
    events.push_back({zero_at, rate, 0.0});
  }
  std::sort(events.begin(), events.end(),
            [](const BlockEvent& l, const BlockEvent& r) { return l.at < r.at; });

  double lam = 0;
  for (const auto& ev : events) {
    const double load_at = load + slope * (ev.at - lam);
    if (load_at <= target && slope < 0) return lam + (target - load) / slope;
    lam = ev.at;
    load = load_at - ev.drop;
    if (load <= target) return lam;
    slope += ev.slope_change;
  }
  return lam;
}

}  // namespace detail

/// Solves the QP by exact block-coordinate descent on its Lagrangian dual
/// (one multiplier per row and per column). Each sweep recovers a primal
/// point, scales it back into the feasible set, and stops once the duality
/// gap is within `cfg.tolerance`. On hitting the iteration cap the best
/// feasible iterate is returned with `converged = false`.
inline SolveResult solve(const QpProblem& qp, const SolverConfig& cfg) {
  validate(cfg);
  SolveResult res;
  res.x = MatchMatrix(qp.m, qp.n);
  if (qp.m == 0 || qp.n == 0) return res;

  const std::size_t m = qp.m, n = qp.n;
  std::vector<double> row_mult(m, 0.0), col_mult(n, 0.0);
  std::vector<detail::BlockTerm> terms(std::max(m, n));
  std::vector<detail::BlockEvent> events;
  events.reserve(2 * std::max(m, n));
  MatchMatrix X(m, n);

  auto reduced = [&](std::size_t i, std::size_t j) {
    return qp.a[qp.at(i, j)] - row_mult[i] - col_mult[j] * qp.size[i];
  };

  double best = -std::numeric_limits<double>::infinity();
  res.converged = false;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = qp.at(i, j);
        terms[j] = {qp.a[k] - col_mult[j] * qp.size[i], 1.0, qp.b[k], qp.u[k]};
      }
      row_mult[i] = detail::solve_multiplier(std::span(terms.data(), n), 1.0, events);
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = qp.at(i, j);
        terms[i] = {qp.a[k] - row_mult[i], qp.size[i], qp.b[k], qp.u[k]};
      }
      col_mult[j] = detail::solve_multiplier(std::span(terms.data(), m), qp.capacity[j], events);
    }

    double bound = 0;
    for (double v : row_mult) bound += v;
    for (std::size_t j = 0; j < n; ++j) bound += col_mult[j] * qp.capacity[j];
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = qp.at(i, j);
        const double c = reduced(i, j);
        bound += detail::block_value(c, qp.b[k], qp.u[k]);
        X(i, j) = detail::block_x(c, qp.b[k], qp.u[k]);
      }
    }

    // Scaling a row or column down never breaks another constraint.
    for (std::size_t i = 0; i < m; ++i) {
      const double load = X.row_sum(i);
      if (load > 1.0)
        for (std::size_t j = 0; j < n; ++j) X(i, j) /= load;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double load = 0;
      for (std::size_t i = 0; i < m; ++i) load += qp.size[i] * X(i, j);
      if (load > qp.capacity[j]) {
        const double scale = load > 0 ? qp.capacity[j] / load : 0.0;
        for (std::size_t i = 0; i < m; ++i) X(i, j) *= scale;
      }
    }
    for (double& v : X.values())
      if (v <= kTol) v = 0.0;

    const double value = qp.value(X);
    if (value > best) {
      best = value;
      res.x = X;
    }
    res.iterations = iter;
    res.objective_trace.push_back(best);
    res.bound_trace.push_back(bound);
    res.upper_bound = bound;
    if (bound - best <= cfg.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.objective = best;
  return res;
}

inline SolveResult solve(const MarketInstance& inst, const SolverConfig& cfg) {
  return solve(build_qp(inst), cfg);
}

/// Largest instance (m * n) accepted by `oracle_solve`.
inline constexpr std::size_t kOracleMaxPairs = 6;

/// Exhaustive grid search over x_ij in {0, u/g, ..., u}, scored with the
/// indicator-bearing objective from `satisfaction`. Verification only.
inline MatchMatrix oracle_solve(const MarketInstance& inst, const SolverConfig& cfg) {
  validate(cfg);
  const std::size_t m = inst.m(), n = inst.n();
  const std::size_t pairs = m * n;
  if (pairs > kOracleMaxPairs)
    throw SizeError("oracle_solve supports at most " + std::to_string(kOracleMaxPairs) +
                    " pairs, got " + std::to_string(pairs));
  MatchMatrix best(m, n);
  if (pairs == 0) return best;

  const auto steps = static_cast<std::size_t>(cfg.oracle_grid_steps);
  std::vector<double> cap(pairs);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cap[i * n + j] = pair_upper_bound(inst.requirements[i], inst.services[j]);

  std::vector<std::size_t> digit(pairs, 0);
  MatchMatrix X(m, n);
  double best_value = -std::numeric_limits<double>::infinity();
  for (;;) {
    for (std::size_t k = 0; k < pairs; ++k)
      X.values()[k] = cap[k] * static_cast<double>(digit[k]) / static_cast<double>(steps);

    bool feasible = true;
    for (std::size_t i = 0; i < m && feasible; ++i) feasible = X.row_sum(i) <= 1.0 + kTol;
    for (std::size_t j = 0; j < n && feasible; ++j) {
      double load = 0;
      for (std::size_t i = 0; i < m; ++i) load += inst.requirements[i].s * X(i, j);
      feasible = load <= inst.services[j].C + kTol;
    }
    if (feasible) {
      const double value = satisfaction(inst, X).objective;
      if (value > best_value) {
        best_value = value;
        best = X;
      }
    }

    std::size_t k = 0;
    while (k < pairs && ++digit[k] > steps) digit[k++] = 0;
    if (k == pairs) break;
  }
  return best;
}

}  // namespace mpm
