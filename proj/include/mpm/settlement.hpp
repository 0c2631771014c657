#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpm/errors.hpp"
#include "mpm/market.hpp"
#include "mpm/random.hpp"
#include "mpm/scoring.hpp"

namespace mpm {

/// Minimum satisfaction a participant accepts. A pair is rejected when its
/// score is strictly below the threshold.
struct RejectionRule {
  double min_sps = 0.5;
  double min_rps = 0.5;

  bool operator==(const RejectionRule&) const = default;
};

inline void validate(const RejectionRule& rule) {
  if (!(0 <= rule.min_sps && rule.min_sps <= 1 && 0 <= rule.min_rps && rule.min_rps <= 1))
    throw ConfigError("rejection thresholds must lie in [0, 1]");
}

inline MatchMatrix apply_rejection(const MarketInstance& inst, const MatchMatrix& X,
                                   const RejectionRule& rule) {
  MatchMatrix out = X;
  const PreferenceWeights& w = inst.config.weights;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t j = 0; j < X.cols(); ++j) {
      const double x = X(i, j);
      if (!is_assigned(x)) continue;
      const PairEvaluation e = evaluate_pair(inst.requirements[i], inst.services[j], x, w);
      if (e.sps < rule.min_sps || e.rps < rule.min_rps) out(i, j) = 0.0;
    }
  }
  return out;
}

struct TradeQuote {
  double alpha = 0.5;
  double tp = 0;
  /// Both reputations were zero; alpha fell back to 0.5.
  bool degenerate = false;
};

/// Reputation-weighted blend of bid and offer; the price lands nearer the
/// lower-reputation party's own price.
inline TradeQuote trade_price(const Requirement& req, const ServiceOffer& svc) {
  if (svc.op > req.bp)
    throw std::domain_error("trade_price: offer " + svc.id + " exceeds bid " + req.id);
  TradeQuote q;
  const double total = req.rep_r + svc.rep_c;
  if (total > 0) {
    q.alpha = svc.rep_c / total;
  } else {
    q.degenerate = true;
  }
  q.tp = q.alpha * req.bp + (1 - q.alpha) * svc.op;
  return q;
}

enum class Outcome { Success, RequesterPaymentFailure, CollaboratorServiceFailure };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::RequesterPaymentFailure: return "requester_payment_failure";
    case Outcome::CollaboratorServiceFailure: return "collaborator_service_failure";
  }
  return "?";
}

inline Outcome outcome_from_string(const std::string& s) {
  if (s == "success") return Outcome::Success;
  if (s == "requester_payment_failure") return Outcome::RequesterPaymentFailure;
  if (s == "collaborator_service_failure") return Outcome::CollaboratorServiceFailure;
  throw ConfigError("unknown outcome '" + s + "'");
}

struct TransactionRecord {
  std::string id;
  std::string requirement_id;
  std::string service_id;
  double x = 0;
  double price = 0;  // $/Gcycle
  double cost = 0;   // price * x * Q, paid by the requester
  std::optional<Outcome> outcome;

  bool operator==(const TransactionRecord&) const = default;
};

struct FailureModel {
  double p_requester_fail = 0.05;
  double p_collaborator_fail = 0.05;

  bool operator==(const FailureModel&) const = default;
};

inline void validate(const FailureModel& fm) {
  auto ok = [](double p) { return 0 <= p && p <= 1; };
  if (!ok(fm.p_requester_fail) || !ok(fm.p_collaborator_fail))
    throw ConfigError("failure probabilities must lie in [0, 1]");
}

/// Settles every record. The requester fails to pay with probability
/// p_requester_fail; otherwise the collaborator fails with
/// p_collaborator_fail. Two draws are consumed per record regardless.
inline std::vector<TransactionRecord> execute(std::vector<TransactionRecord> records,
                                              const FailureModel& model, std::uint64_t seed) {
  validate(model);
  Sampler rng(seed);
  for (auto& rec : records) {
    if (rec.outcome) throw std::logic_error("transaction " + rec.id + " already executed");
    const bool requester_fails = rng.bernoulli(model.p_requester_fail);
    const bool collaborator_fails = rng.bernoulli(model.p_collaborator_fail);
    if (requester_fails)
      rec.outcome = Outcome::RequesterPaymentFailure;
    else if (collaborator_fails)
      rec.outcome = Outcome::CollaboratorServiceFailure;
    else
      rec.outcome = Outcome::Success;
  }
  return records;
}

enum class Role { Requester, Collaborator };

inline const char* to_string(Role r) {
  return r == Role::Requester ? "requester" : "collaborator";
}

inline Role role_from_string(const std::string& s) {
  if (s == "requester") return Role::Requester;
  if (s == "collaborator") return Role::Collaborator;
  throw ConfigError("unknown role '" + s + "'");
}

struct ReputationRules {
  double initial = 0.6;
  double success_reward = 0.01;
  double failure_penalty = 0.1;

  bool operator==(const ReputationRules&) const = default;
};

inline double update_reputation(double current, Role role, Outcome outcome,
                                const ReputationRules& rules = {}) {
  double next = current;
  switch (outcome) {
    case Outcome::Success:
      next = current + rules.success_reward;
      break;
    case Outcome::RequesterPaymentFailure:
      if (role == Role::Requester) next = current - rules.failure_penalty;
      break;
    case Outcome::CollaboratorServiceFailure:
      if (role == Role::Collaborator) next = current - rules.failure_penalty;
      break;
  }
  return std::clamp(next, 0.0, 1.0);
}

}  // namespace mpm
