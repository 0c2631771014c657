#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "mpm/errors.hpp"
#include "mpm/random.hpp"

namespace mpm {

enum class ParticipantKind { Edge, Terminal };

inline const char* to_string(ParticipantKind kind) {
  return kind == ParticipantKind::Edge ? "edge" : "terminal";
}

/// A requester's offloading requirement. Units: GB, Gcycle, s, $/Gcycle.
struct Requirement {
  std::string id;
  ParticipantKind kind = ParticipantKind::Terminal;
  double s = 1.0;      // task size
  double Q = 1.0;      // CPU cycles required
  double tau = 1.0;    // maximum tolerable delay
  double bp = 1.0;     // bidding price
  double rep_r = 0.6;  // requester reputation in [0, 1]

  bool operator==(const Requirement&) const = default;
};

/// A collaborator's published service.
struct ServiceOffer {
  std::string id;
  ParticipantKind kind = ParticipantKind::Terminal;
  double C = 1.0;      // cache offered (GB)
  double f = 1.0;      // CPU frequency (GHz)
  double r = 1.0;      // transmission rate (Gbps)
  double eps = 1.0;    // maximum acceptable energy (J)
  double e_com = 0.0;  // transmission energy per second (J/s)
  double e_exe = 0.0;  // execution energy per second (J/s)
  double op = 1.0;     // offering price ($/Gcycle)
  double rep_c = 0.6;  // collaborator reputation in [0, 1]

  bool operator==(const ServiceOffer&) const = default;
};

struct PreferenceWeights {
  std::array<double, 3> phi{0.36, 0.28, 0.36};  // delay, price, reputation
  std::array<double, 3> psi{0.36, 0.28, 0.36};  // energy, price, reputation
  double w1 = 0.5;
  double w2 = 0.5;

  bool operator==(const PreferenceWeights&) const = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  bool operator==(const Range&) const = default;
};

/// Sampling ranges for one participant kind. Reputation is drawn on the raw
/// [40, 100] scale and divided by 100.
struct KindRanges {
  Range s, Q, tau;
  Range C, f, r, eps, e_com, e_exe;
  Range bp, op;
  Range reputation;

  bool operator==(const KindRanges&) const = default;
};

inline KindRanges default_edge_ranges() {
  KindRanges k;
  k.s = {0.06, 10};
  k.Q = {0.6, 90};
  k.tau = {10, 30};
  k.C = {5, 10};
  k.f = {3, 15};
  k.r = {0.5, 2.5};
  k.eps = {150, 250};
  k.e_com = {0.2, 0.5};
  k.e_exe = {0.75, 1.25};
  k.bp = {0.1, 10};
  k.op = {0.1, 10};
  k.reputation = {40, 100};
  return k;
}

inline KindRanges default_terminal_ranges() {
  KindRanges k = default_edge_ranges();
  k.tau = {5, 15};
  k.C = {1, 5};
  k.f = {1, 5};
  k.r = {0.1, 0.9};
  k.eps = {5, 15};
  k.e_com = {0.1, 0.3};
  k.e_exe = {0.3, 0.6};
  return k;
}

inline constexpr double kReputationScale = 100.0;

struct MarketConfig {
  double p_min = 0.1;
  double p_max = 10.0;
  PreferenceWeights weights;
  KindRanges edge = default_edge_ranges();
  KindRanges terminal = default_terminal_ranges();
  /// Ratio of edge participants to terminal participants.
  double edge_ratio = 1.0 / 30.0;
  std::string prng{kPrngName};

  const KindRanges& ranges(ParticipantKind kind) const {
    return kind == ParticipantKind::Edge ? edge : terminal;
  }

  bool operator==(const MarketConfig&) const = default;
};

struct MarketInstance {
  std::vector<Requirement> requirements;
  std::vector<ServiceOffer> services;
  MarketConfig config;

  std::size_t m() const { return requirements.size(); }
  std::size_t n() const { return services.size(); }
  bool empty() const { return requirements.empty() || services.empty(); }

  bool operator==(const MarketInstance&) const = default;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

inline bool finite_all(std::initializer_list<double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

inline void validate_ranges(const KindRanges& k, const char* label) {
  const std::pair<const char*, const Range*> rows[] = {
      {"s", &k.s},         {"Q", &k.Q},       {"tau", &k.tau},
      {"C", &k.C},         {"f", &k.f},       {"r", &k.r},
      {"eps", &k.eps},     {"e_com", &k.e_com}, {"e_exe", &k.e_exe},
      {"bp", &k.bp},       {"op", &k.op},     {"reputation", &k.reputation}};
  for (auto [name, range] : rows) {
    require(finite_all({range->lo, range->hi}) && range->lo <= range->hi,
            std::string(label) + " range '" + name + "' must satisfy lo <= hi");
  }
  require(k.s.lo > 0 && k.Q.lo > 0 && k.tau.lo > 0 && k.f.lo > 0 &&
              k.r.lo > 0 && k.eps.lo > 0 && k.bp.lo > 0 && k.op.lo > 0,
          std::string(label) + " ranges for s, Q, tau, f, r, eps, bp, op must be positive");
  require(k.C.lo >= 0 && k.e_com.lo >= 0 && k.e_exe.lo >= 0,
          std::string(label) + " ranges for C, e_com, e_exe must be non-negative");
  require(k.reputation.lo >= 0 && k.reputation.hi <= kReputationScale,
          std::string(label) + " reputation range must lie in [0, 100]");
}

}  // namespace detail

inline void validate(const PreferenceWeights& w) {
  constexpr double tol = 1e-9;
  double sum_phi = 0, sum_psi = 0;
  for (int k = 0; k < 3; ++k) {
    detail::require(w.phi[k] >= 0 && w.psi[k] >= 0, "significance factors must be >= 0");
    sum_phi += w.phi[k];
    sum_psi += w.psi[k];
  }
  detail::require(std::abs(sum_phi - 1) <= tol, "phi must sum to 1");
  detail::require(std::abs(sum_psi - 1) <= tol, "psi must sum to 1");
  detail::require(w.w1 >= 0 && w.w2 >= 0 && std::abs(w.w1 + w.w2 - 1) <= tol,
                  "objective weights must be >= 0 and sum to 1");
}

inline void validate(const MarketConfig& cfg) {
  detail::require(std::isfinite(cfg.p_min) && std::isfinite(cfg.p_max) &&
                      0 < cfg.p_min && cfg.p_min <= cfg.p_max,
                  "price bounds must satisfy 0 < p_min <= p_max");
  validate(cfg.weights);
  detail::validate_ranges(cfg.edge, "edge");
  detail::validate_ranges(cfg.terminal, "terminal");
  detail::require(std::isfinite(cfg.edge_ratio) && cfg.edge_ratio >= 0,
                  "edge_ratio must be >= 0");
  detail::require(cfg.prng == kPrngName, "unsupported prng '" + cfg.prng + "'");
}

inline void validate(const Requirement& q) {
  detail::require(detail::finite_all({q.s, q.Q, q.tau, q.bp, q.rep_r}),
                  "requirement " + q.id + ": non-finite field");
  detail::require(q.s > 0 && q.Q > 0 && q.tau > 0 && q.bp > 0,
                  "requirement " + q.id + ": s, Q, tau, bp must be positive");
  detail::require(0 <= q.rep_r && q.rep_r <= 1,
                  "requirement " + q.id + ": reputation outside [0, 1]");
}

inline void validate(const ServiceOffer& v) {
  detail::require(
      detail::finite_all({v.C, v.f, v.r, v.eps, v.e_com, v.e_exe, v.op, v.rep_c}),
      "service " + v.id + ": non-finite field");
  detail::require(v.C >= 0 && v.e_com >= 0 && v.e_exe >= 0,
                  "service " + v.id + ": C, e_com, e_exe must be non-negative");
  detail::require(v.f > 0 && v.r > 0 && v.eps > 0 && v.op > 0,
                  "service " + v.id + ": f, r, eps, op must be positive");
  detail::require(0 <= v.rep_c && v.rep_c <= 1,
                  "service " + v.id + ": reputation outside [0, 1]");
}

inline void validate(const MarketInstance& inst) {
  validate(inst.config);
  std::unordered_set<std::string> seen;
  for (const auto& q : inst.requirements) {
    validate(q);
    detail::require(seen.insert(q.id).second, "duplicate requirement id " + q.id);
  }
  seen.clear();
  for (const auto& v : inst.services) {
    validate(v);
    detail::require(seen.insert(v.id).second, "duplicate service id " + v.id);
  }
}

/// Number of edge participants among `count`. The first entries of each list
/// are edges, the rest terminals.
inline std::size_t edge_count(std::size_t count, double edge_ratio) {
  const double share = edge_ratio / (1.0 + edge_ratio);
  const auto edges = static_cast<std::size_t>(std::llround(static_cast<double>(count) * share));
  return std::min(edges, count);
}

/// Draws a random market with every parameter uniform in its kind's range.
/// Pure in (config, m, n, seed).
inline MarketInstance generate_instance(const MarketConfig& config, std::size_t m,
                                        std::size_t n, std::uint64_t seed) {
  validate(config);
  MarketInstance inst;
  inst.config = config;
  Sampler rng(seed);
  auto draw = [&rng](const Range& range) { return rng.uniform(range.lo, range.hi); };

  const std::size_t m_edge = edge_count(m, config.edge_ratio);
  inst.requirements.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Requirement q;
    q.id = "R" + std::to_string(i);
    q.kind = i < m_edge ? ParticipantKind::Edge : ParticipantKind::Terminal;
    const KindRanges& k = config.ranges(q.kind);
    q.s = draw(k.s);
    q.Q = draw(k.Q);
    q.tau = draw(k.tau);
    q.bp = draw(k.bp);
    q.rep_r = draw(k.reputation) / kReputationScale;
    inst.requirements.push_back(std::move(q));
  }

  const std::size_t n_edge = edge_count(n, config.edge_ratio);
  inst.services.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    ServiceOffer v;
    v.id = "S" + std::to_string(j);
    v.kind = j < n_edge ? ParticipantKind::Edge : ParticipantKind::Terminal;
    const KindRanges& k = config.ranges(v.kind);
    v.C = draw(k.C);
    v.f = draw(k.f);
    v.r = draw(k.r);
    v.eps = draw(k.eps);
    v.e_com = draw(k.e_com);
    v.e_exe = draw(k.e_exe);
    v.op = draw(k.op);
    v.rep_c = draw(k.reputation) / kReputationScale;
    inst.services.push_back(std::move(v));
  }
  return inst;
}

/// Drops every submission whose price lies outside [p_min, p_max].
inline MarketInstance filter_prices(const MarketInstance& inst) {
  MarketInstance out;
  out.config = inst.config;
  const double lo = inst.config.p_min, hi = inst.config.p_max;
  for (const auto& q : inst.requirements)
    if (lo <= q.bp && q.bp <= hi) out.requirements.push_back(q);
  for (const auto& v : inst.services)
    if (lo <= v.op && v.op <= hi) out.services.push_back(v);
  return out;
}

}  // namespace mpm
