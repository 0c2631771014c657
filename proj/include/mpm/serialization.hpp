#pragma once

// JSON forms of the market, solver and settlement types. Every field is
// optional on input and falls back to the default-constructed value, so a
// config file only needs to name what it overrides.

#include <string>

#include <nlohmann/json.hpp>

#include "mpm/errors.hpp"
#include "mpm/market.hpp"
#include "mpm/settlement.hpp"
#include "mpm/solver.hpp"

namespace mpm {

using json = nlohmann::json;

namespace detail {

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(field);
}

inline void require_object(const json& j, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
}

}  // namespace detail

inline void to_json(json& j, ParticipantKind k) { j = to_string(k); }

inline void from_json(const json& j, ParticipantKind& k) {
  const auto s = j.get<std::string>();
  if (s == "edge")
    k = ParticipantKind::Edge;
  else if (s == "terminal")
    k = ParticipantKind::Terminal;
  else
    throw ConfigError("unknown participant kind '" + s + "'");
}

inline void to_json(json& j, const Range& r) { j = json::array({r.lo, r.hi}); }

inline void from_json(const json& j, Range& r) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("range must be [lo, hi]");
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

inline void to_json(json& j, const KindRanges& k) {
  j = json{{"s", k.s},         {"Q", k.Q},         {"tau", k.tau},     {"C", k.C},
           {"f", k.f},         {"r", k.r},         {"eps", k.eps},     {"e_com", k.e_com},
           {"e_exe", k.e_exe}, {"bp", k.bp},       {"op", k.op},       {"reputation", k.reputation}};
}

inline void from_json(const json& j, KindRanges& k) {
  detail::require_object(j, "ranges");
  detail::read_opt(j, "s", k.s);
  detail::read_opt(j, "Q", k.Q);
  detail::read_opt(j, "tau", k.tau);
  detail::read_opt(j, "C", k.C);
  detail::read_opt(j, "f", k.f);
  detail::read_opt(j, "r", k.r);
  detail::read_opt(j, "eps", k.eps);
  detail::read_opt(j, "e_com", k.e_com);
  detail::read_opt(j, "e_exe", k.e_exe);
  detail::read_opt(j, "bp", k.bp);
  detail::read_opt(j, "op", k.op);
  detail::read_opt(j, "reputation", k.reputation);
}

inline void to_json(json& j, const PreferenceWeights& w) {
  j = json{{"phi", w.phi}, {"psi", w.psi}, {"w1", w.w1}, {"w2", w.w2}};
}

inline void from_json(const json& j, PreferenceWeights& w) {
  detail::require_object(j, "weights");
  detail::read_opt(j, "phi", w.phi);
  detail::read_opt(j, "psi", w.psi);
  detail::read_opt(j, "w1", w.w1);
  detail::read_opt(j, "w2", w.w2);
}

inline void to_json(json& j, const MarketConfig& c) {
  j = json{{"p_min", c.p_min},
           {"p_max", c.p_max},
           {"weights", c.weights},
           {"ranges", {{"edge", c.edge}, {"terminal", c.terminal}}},
           {"edge_ratio", c.edge_ratio},
           {"prng", c.prng}};
}

inline void from_json(const json& j, MarketConfig& c) {
  detail::require_object(j, "market config");
  detail::read_opt(j, "p_min", c.p_min);
  detail::read_opt(j, "p_max", c.p_max);
  detail::read_opt(j, "weights", c.weights);
  if (auto it = j.find("ranges"); it != j.end()) {
    detail::require_object(*it, "ranges");
    detail::read_opt(*it, "edge", c.edge);
    detail::read_opt(*it, "terminal", c.terminal);
  }
  detail::read_opt(j, "edge_ratio", c.edge_ratio);
  detail::read_opt(j, "prng", c.prng);
}

inline void to_json(json& j, const Requirement& q) {
  j = json{{"id", q.id}, {"kind", q.kind}, {"s", q.s},         {"Q", q.Q},
           {"tau", q.tau}, {"bp", q.bp},   {"rep_r", q.rep_r}};
}

inline void from_json(const json& j, Requirement& q) {
  detail::require_object(j, "requirement");
  q.id = j.at("id").get<std::string>();
  detail::read_opt(j, "kind", q.kind);
  q.s = j.at("s").get<double>();
  q.Q = j.at("Q").get<double>();
  q.tau = j.at("tau").get<double>();
  q.bp = j.at("bp").get<double>();
  q.rep_r = j.at("rep_r").get<double>();
}

inline void to_json(json& j, const ServiceOffer& v) {
  j = json{{"id", v.id},       {"kind", v.kind},   {"C", v.C},   {"f", v.f},
           {"r", v.r},         {"eps", v.eps},     {"e_com", v.e_com},
           {"e_exe", v.e_exe}, {"op", v.op},       {"rep_c", v.rep_c}};
}

inline void from_json(const json& j, ServiceOffer& v) {
  detail::require_object(j, "service");
  v.id = j.at("id").get<std::string>();
  detail::read_opt(j, "kind", v.kind);
  v.C = j.at("C").get<double>();
  v.f = j.at("f").get<double>();
  v.r = j.at("r").get<double>();
  v.eps = j.at("eps").get<double>();
  v.e_com = j.at("e_com").get<double>();
  v.e_exe = j.at("e_exe").get<double>();
  v.op = j.at("op").get<double>();
  v.rep_c = j.at("rep_c").get<double>();
}

inline void to_json(json& j, const MarketInstance& inst) {
  j = json{{"config", inst.config},
           {"requirements", inst.requirements},
           {"services", inst.services}};
}

inline void from_json(const json& j, MarketInstance& inst) {
  detail::require_object(j, "instance");
  detail::read_opt(j, "config", inst.config);
  detail::read_opt(j, "requirements", inst.requirements);
  detail::read_opt(j, "services", inst.services);
}

inline void to_json(json& j, const SolverConfig& c) {
  j = json{{"max_iterations", c.max_iterations},
           {"tolerance", c.tolerance},
           {"oracle_grid_steps", c.oracle_grid_steps}};
}

inline void from_json(const json& j, SolverConfig& c) {
  detail::require_object(j, "solver config");
  detail::read_opt(j, "max_iterations", c.max_iterations);
  detail::read_opt(j, "tolerance", c.tolerance);
  detail::read_opt(j, "oracle_grid_steps", c.oracle_grid_steps);
}

inline void to_json(json& j, const RejectionRule& r) {
  j = json{{"min_sps", r.min_sps}, {"min_rps", r.min_rps}};
}

inline void from_json(const json& j, RejectionRule& r) {
  detail::require_object(j, "rejection rule");
  detail::read_opt(j, "min_sps", r.min_sps);
  detail::read_opt(j, "min_rps", r.min_rps);
}

inline void to_json(json& j, const FailureModel& f) {
  j = json{{"p_requester_fail", f.p_requester_fail},
           {"p_collaborator_fail", f.p_collaborator_fail}};
}

inline void from_json(const json& j, FailureModel& f) {
  detail::require_object(j, "failure model");
  detail::read_opt(j, "p_requester_fail", f.p_requester_fail);
  detail::read_opt(j, "p_collaborator_fail", f.p_collaborator_fail);
}

inline void to_json(json& j, const ReputationRules& r) {
  j = json{{"initial", r.initial},
           {"success_reward", r.success_reward},
           {"failure_penalty", r.failure_penalty}};
}

inline void from_json(const json& j, ReputationRules& r) {
  detail::require_object(j, "reputation rules");
  detail::read_opt(j, "initial", r.initial);
  detail::read_opt(j, "success_reward", r.success_reward);
  detail::read_opt(j, "failure_penalty", r.failure_penalty);
}

inline void to_json(json& j, const TransactionRecord& t) {
  j = json{{"id", t.id},
           {"requirement_id", t.requirement_id},
           {"service_id", t.service_id},
           {"x", t.x},
           {"price", t.price},
           {"cost", t.cost},
           {"outcome", t.outcome ? json(to_string(*t.outcome)) : json(nullptr)}};
}

inline void from_json(const json& j, TransactionRecord& t) {
  detail::require_object(j, "transaction");
  t.id = j.at("id").get<std::string>();
  t.requirement_id = j.at("requirement_id").get<std::string>();
  t.service_id = j.at("service_id").get<std::string>();
  t.x = j.at("x").get<double>();
  t.price = j.at("price").get<double>();
  t.cost = j.at("cost").get<double>();
  t.outcome.reset();
  if (auto it = j.find("outcome"); it != j.end() && !it->is_null())
    t.outcome = outcome_from_string(it->get<std::string>());
}

}  // namespace mpm
