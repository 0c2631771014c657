#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "mpm/double_auction.hpp"
#include "mpm/ledger.hpp"
#include "mpm/market.hpp"
#include "mpm/scoring.hpp"
#include "mpm/serialization.hpp"
#include "mpm/settlement.hpp"
#include "mpm/solver.hpp"

namespace mpm {

enum class Mechanism { MPM, DA };

inline const char* to_string(Mechanism m) { return m == Mechanism::MPM ? "MPM" : "DA"; }

inline Mechanism mechanism_from_string(const std::string& s) {
  if (s == "MPM" || s == "mpm") return Mechanism::MPM;
  if (s == "DA" || s == "da") return Mechanism::DA;
  throw ConfigError("unknown mechanism '" + s + "'");
}

inline void to_json(json& j, Mechanism m) { j = to_string(m); }
inline void from_json(const json& j, Mechanism& m) { m = mechanism_from_string(j.get<std::string>()); }

/// Everything a single round needs besides the instance and seed.
struct RoundConfig {
  SolverConfig solver;
  RejectionRule rejection;
  FailureModel failure;
  ReputationRules reputation;
  /// Apply the rejection rule to DA matches as well.
  bool da_rejection = false;
};

struct ExperimentConfig {
  std::vector<std::pair<std::size_t, std::size_t>> sizes{{30, 30}, {60, 60}, {90, 90}};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  MarketConfig market;
  RoundConfig round;
  std::vector<Mechanism> mechanisms{Mechanism::MPM, Mechanism::DA};
  /// Carry reputations from each round's chains into the next seed's
  /// instance (same participant ids) instead of using the drawn scores.
  bool sequential_rounds = false;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.sizes.empty()) throw ConfigError("experiment needs at least one size");
  if (cfg.seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (cfg.mechanisms.empty()) throw ConfigError("experiment needs at least one mechanism");
  validate(cfg.market);
  validate(cfg.round.solver);
  validate(cfg.round.rejection);
  validate(cfg.round.failure);
}

inline void to_json(json& j, const ExperimentConfig& c) {
  json sizes = json::array();
  for (auto [m, n] : c.sizes) sizes.push_back({m, n});
  j = json{{"sizes", sizes},
           {"seeds", c.seeds},
           {"market", c.market},
           {"solver", c.round.solver},
           {"rejection", c.round.rejection},
           {"failure", c.round.failure},
           {"reputation", c.round.reputation},
           {"da_rejection", c.round.da_rejection},
           {"mechanisms", c.mechanisms},
           {"sequential_rounds", c.sequential_rounds}};
}

inline void from_json(const json& j, ExperimentConfig& c) {
  detail::require_object(j, "experiment config");
  if (auto it = j.find("sizes"); it != j.end()) {
    c.sizes.clear();
    for (const auto& s : *it) {
      if (s.is_array() && s.size() == 2)
        c.sizes.emplace_back(s[0].get<std::size_t>(), s[1].get<std::size_t>());
      else if (s.is_number_unsigned())
        c.sizes.emplace_back(s.get<std::size_t>(), s.get<std::size_t>());
      else
        throw ConfigError("sizes entries must be [m, n] or a single count");
    }
  }
  detail::read_opt(j, "seeds", c.seeds);
  detail::read_opt(j, "market", c.market);
  detail::read_opt(j, "solver", c.round.solver);
  detail::read_opt(j, "rejection", c.round.rejection);
  detail::read_opt(j, "failure", c.round.failure);
  detail::read_opt(j, "reputation", c.round.reputation);
  detail::read_opt(j, "da_rejection", c.round.da_rejection);
  detail::read_opt(j, "mechanisms", c.mechanisms);
  detail::read_opt(j, "sequential_rounds", c.sequential_rounds);
}

/// One row of the report. Count-like fields are doubles so the same type
/// carries cross-seed means.
struct RoundMetrics {
  Mechanism mechanism = Mechanism::MPM;
  std::size_t m = 0;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;  // empty on mean rows
  double ars = 0;
  double acs = 0;
  double objective = 0;
  double matched_pairs = 0;   // nonzero entries before rejection
  double accepted_pairs = 0;  // nonzero entries after rejection
  double rejection_rate = 0;
  double total_task_size = 0;  // GB
  double max_delay = 0;        // s
  double cpu_cycles = 0;       // Gcycle
  double cache_used = 0;       // GB
  double energy = 0;           // J
  double avg_trade_price = 0;  // $/Gcycle
  std::optional<double> cost_slope;
  std::optional<double> income_slope;
  bool converged = true;
  double wall_time = 0;  // s, match step only

  bool operator==(const RoundMetrics&) const = default;
};

struct Report {
  std::vector<RoundMetrics> rows;
  std::vector<RoundMetrics> means;
};

/// The three ledgers of one market plus their shared clock.
struct Ledgers {
  Chain transactions;
  Chain requester_reputation;
  Chain collaborator_reputation;
  LogicalClock clock;
  /// Latest score per enrolled participant; mirrors the reputation chains.
  std::map<std::string, double> requester_scores;
  std::map<std::string, double> collaborator_scores;
  bool rules_recorded = false;
};

struct RoundResult {
  MarketInstance instance;  // after price filtering
  MatchMatrix matched;
  MatchMatrix accepted;
  MatchMatrix prices;  // trade price per accepted pair
  std::vector<TransactionRecord> transactions;
  RoundMetrics metrics;
};

/// Ordinary least-squares slope of y on x; absent with fewer than two points
/// or no spread in x.
inline std::optional<double> ols_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0) return std::nullopt;
  return sxy / sxx;
}

/// Metrics of an accepted match matrix. `prices` holds the trade price of
/// every accepted pair; `matched_pairs` is the pre-rejection count.
inline RoundMetrics compute_metrics(const MarketInstance& inst, const MatchMatrix& X,
                                    const MatchMatrix& prices, std::size_t matched_pairs) {
  RoundMetrics r;
  r.m = inst.m();
  r.n = inst.n();
  const SatisfactionSummary sat = satisfaction(inst, X);
  r.ars = sat.ars;
  r.acs = sat.acs;
  r.objective = sat.objective;

  std::vector<double> req_cost(r.m, 0.0), col_income(r.n, 0.0);
  std::vector<int> req_deals(r.m, 0), col_deals(r.n, 0);
  double price_total = 0;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < r.m; ++i) {
    const Requirement& req = inst.requirements[i];
    for (std::size_t j = 0; j < r.n; ++j) {
      const double x = X(i, j);
      if (!is_assigned(x)) continue;
      const ServiceOffer& svc = inst.services[j];
      ++accepted;
      r.total_task_size += x * req.s;
      r.cache_used += x * req.s;
      r.cpu_cycles += x * req.Q;
      r.energy += energy(req, svc, x);
      r.max_delay = std::max(r.max_delay, task_delay(req, svc, x));
      const double tp = prices(i, j);
      price_total += tp;
      const double cost = tp * x * req.Q;
      req_cost[i] += cost;
      col_income[j] += cost;
      ++req_deals[i];
      ++col_deals[j];
    }
  }
  r.accepted_pairs = static_cast<double>(accepted);
  r.matched_pairs = static_cast<double>(matched_pairs);
  r.rejection_rate =
      matched_pairs == 0 ? 0.0
                         : static_cast<double>(matched_pairs - std::min(matched_pairs, accepted)) /
                               static_cast<double>(matched_pairs);
  r.avg_trade_price = accepted == 0 ? 0.0 : price_total / static_cast<double>(accepted);

  std::vector<std::pair<double, double>> cost_pts, income_pts;
  for (std::size_t i = 0; i < r.m; ++i)
    if (req_deals[i] > 0)
      cost_pts.emplace_back(inst.requirements[i].rep_r, req_cost[i] / req_deals[i]);
  for (std::size_t j = 0; j < r.n; ++j)
    if (col_deals[j] > 0)
      income_pts.emplace_back(inst.services[j].rep_c, col_income[j] / col_deals[j]);
  r.cost_slope = ols_slope(cost_pts);
  r.income_slope = ols_slope(income_pts);
  return r;
}

namespace detail {

inline void enroll(Chain& chain, std::map<std::string, double>& scores, LogicalClock& clock,
                   const std::string& id, Role role, double score) {
  if (scores.emplace(id, score).second) chain.append(enrollment_payload(id, role, score), clock());
}

}  // namespace detail

/// One trading round: price filter, matching, rejection, pricing,
/// execution, reputation updates. Every step is recorded on `ledgers`.
///
/// MPM pairs whose offer exceeds the bid are voided together with the
/// rule-based rejections: the bid is the most the requester will pay and
/// the offer the least the collaborator will take.
inline RoundResult run_round(const MarketInstance& input, Mechanism mechanism,
                             const RoundConfig& cfg, std::uint64_t seed, Ledgers& ledgers) {
  RoundResult res;
  res.instance = filter_prices(input);
  const MarketInstance& inst = res.instance;
  const std::size_t m = inst.m(), n = inst.n();

  if (!ledgers.rules_recorded) {
    ledgers.requester_reputation.append(rules_payload(cfg.reputation), ledgers.clock());
    ledgers.collaborator_reputation.append(rules_payload(cfg.reputation), ledgers.clock());
    ledgers.rules_recorded = true;
  }
  ledgers.transactions.append(
      json{{"type", "submissions"}, {"seed", seed}, {"mechanism", to_string(mechanism)},
           {"requirements", inst.requirements}, {"services", inst.services}},
      ledgers.clock());

  bool converged = true;
  const auto start = std::chrono::steady_clock::now();
  if (mechanism == Mechanism::MPM) {
    SolveResult sol = solve(inst, cfg.solver);
    converged = sol.converged;
    res.matched = std::move(sol.x);
  } else {
    res.matched = run_da(inst).x;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  res.accepted = res.matched;
  if (mechanism == Mechanism::MPM || cfg.da_rejection)
    res.accepted = apply_rejection(inst, res.matched, cfg.rejection);
  if (mechanism == Mechanism::MPM) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (inst.services[j].op > inst.requirements[i].bp) res.accepted(i, j) = 0.0;
  }

  res.prices = MatchMatrix(m, n);
  std::vector<TransactionRecord> pending;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = res.accepted(i, j);
      if (!is_assigned(x)) continue;
      const Requirement& req = inst.requirements[i];
      const ServiceOffer& svc = inst.services[j];
      const double tp = mechanism == Mechanism::MPM ? trade_price(req, svc).tp : req.bp;
      res.prices(i, j) = tp;
      TransactionRecord t;
      t.id = "T" + std::to_string(pending.size());
      t.requirement_id = req.id;
      t.service_id = svc.id;
      t.x = x;
      t.price = tp;
      t.cost = tp * x * req.Q;
      pending.push_back(std::move(t));
    }
  }
  res.transactions = execute(std::move(pending), cfg.failure, mix_seed(seed, 1));
  ledgers.transactions.append(
      json{{"type", "transactions"}, {"seed", seed}, {"transactions", res.transactions}},
      ledgers.clock());

  for (const auto& q : inst.requirements)
    detail::enroll(ledgers.requester_reputation, ledgers.requester_scores, ledgers.clock, q.id,
                   Role::Requester, q.rep_r);
  for (const auto& v : inst.services)
    detail::enroll(ledgers.collaborator_reputation, ledgers.collaborator_scores, ledgers.clock,
                   v.id, Role::Collaborator, v.rep_c);
  for (const auto& t : res.transactions) {
    const Outcome outcome = *t.outcome;
    auto record = [&](Chain& chain, std::map<std::string, double>& scores,
                      const std::string& id, Role role) {
      ReputationUpdate u{id, role, scores[id], 0.0, t.id, outcome};
      u.new_score = update_reputation(u.old_score, role, outcome, cfg.reputation);
      scores[id] = u.new_score;
      chain.append(json(u), ledgers.clock());
    };
    record(ledgers.requester_reputation, ledgers.requester_scores, t.requirement_id,
           Role::Requester);
    record(ledgers.collaborator_reputation, ledgers.collaborator_scores, t.service_id,
           Role::Collaborator);
  }

  res.metrics = compute_metrics(inst, res.accepted, res.prices, res.matched.nonzeros());
  res.metrics.mechanism = mechanism;
  res.metrics.seed = seed;
  res.metrics.converged = converged;
  res.metrics.wall_time = wall;
  return res;
}

namespace detail {

inline RoundMetrics mean_of(const std::vector<const RoundMetrics*>& rows) {
  RoundMetrics out;
  out.mechanism = rows.front()->mechanism;
  out.m = rows.front()->m;
  out.n = rows.front()->n;
  const double k = static_cast<double>(rows.size());
  double cost_sum = 0, income_sum = 0;
  int cost_count = 0, income_count = 0;
  for (const RoundMetrics* r : rows) {
    out.ars += r->ars / k;
    out.acs += r->acs / k;
    out.objective += r->objective / k;
    out.matched_pairs += r->matched_pairs / k;
    out.accepted_pairs += r->accepted_pairs / k;
    out.rejection_rate += r->rejection_rate / k;
    out.total_task_size += r->total_task_size / k;
    out.max_delay += r->max_delay / k;
    out.cpu_cycles += r->cpu_cycles / k;
    out.cache_used += r->cache_used / k;
    out.energy += r->energy / k;
    out.avg_trade_price += r->avg_trade_price / k;
    out.wall_time += r->wall_time / k;
    out.converged = out.converged && r->converged;
    if (r->cost_slope) {
      cost_sum += *r->cost_slope;
      ++cost_count;
    }
    if (r->income_slope) {
      income_sum += *r->income_slope;
      ++income_count;
    }
  }
  if (cost_count > 0) out.cost_slope = cost_sum / cost_count;
  if (income_count > 0) out.income_slope = income_sum / income_count;
  return out;
}

}  // namespace detail

/// Runs every (size, seed, mechanism) round. All mechanisms see the same
/// generated instance for a given (size, seed).
inline Report run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  Report report;
  for (auto [m, n] : cfg.sizes) {
    std::map<Mechanism, Ledgers> carried;
    for (std::uint64_t seed : cfg.seeds) {
      const MarketInstance base = generate_instance(cfg.market, m, n, seed);
      for (Mechanism mech : cfg.mechanisms) {
        Ledgers fresh;
        Ledgers& ledgers = cfg.sequential_rounds ? carried[mech] : fresh;
        MarketInstance inst = base;
        if (cfg.sequential_rounds) {
          for (auto& q : inst.requirements)
            if (auto it = ledgers.requester_scores.find(q.id); it != ledgers.requester_scores.end())
              q.rep_r = it->second;
          for (auto& v : inst.services)
            if (auto it = ledgers.collaborator_scores.find(v.id);
                it != ledgers.collaborator_scores.end())
              v.rep_c = it->second;
        }
        report.rows.push_back(run_round(inst, mech, cfg.round, seed, ledgers).metrics);
      }
    }
  }

  for (auto [m, n] : cfg.sizes) {
    for (Mechanism mech : cfg.mechanisms) {
      std::vector<const RoundMetrics*> group;
      for (const auto& r : report.rows)
        if (r.m == m && r.n == n && r.mechanism == mech) group.push_back(&r);
      if (!group.empty()) report.means.push_back(detail::mean_of(group));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report output

/// Column order of report.csv and means.csv.
inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "mechanism",      "m",               "n",           "seed",
      "ars",            "acs",             "objective",   "matched_pairs",
      "accepted_pairs", "rejection_rate",  "total_task_size", "max_delay",
      "cpu_cycles",     "cache_used",      "energy",      "avg_trade_price",
      "cost_slope",     "income_slope",    "converged",   "wall_time"};
  return cols;
}

namespace detail {

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("bad number '" + s + "' in report");
  return v;
}

inline std::string csv_row(const RoundMetrics& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
  std::ostringstream os;
  os << to_string(r.mechanism) << ',' << r.m << ',' << r.n << ','
     << (r.seed ? std::to_string(*r.seed) : std::string("mean")) << ','
     << format_double(r.ars) << ',' << format_double(r.acs) << ','
     << format_double(r.objective) << ',' << format_double(r.matched_pairs) << ','
     << format_double(r.accepted_pairs) << ',' << format_double(r.rejection_rate) << ','
     << format_double(r.total_task_size) << ',' << format_double(r.max_delay) << ','
     << format_double(r.cpu_cycles) << ',' << format_double(r.cache_used) << ','
     << format_double(r.energy) << ',' << format_double(r.avg_trade_price) << ','
     << opt(r.cost_slope) << ',' << opt(r.income_slope) << ',' << (r.converged ? 1 : 0) << ','
     << format_double(r.wall_time);
  return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::string report_csv(const std::vector<RoundMetrics>& rows) {
  std::string out;
  const auto& cols = report_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
  out += '\n';
  for (const auto& r : rows) out += detail::csv_row(r) + '\n';
  return out;
}

inline std::vector<RoundMetrics> parse_report_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("report CSV is empty");
  if (detail::split_csv(line) != report_columns()) throw ConfigError("unexpected report header");
  std::vector<RoundMetrics> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = detail::split_csv(line);
    if (c.size() != report_columns().size()) throw ConfigError("bad report row: " + line);
    auto opt = [](const std::string& s) {
      return s.empty() ? std::nullopt : std::optional<double>(detail::parse_double(s));
    };
    RoundMetrics r;
    r.mechanism = mechanism_from_string(c[0]);
    r.m = std::stoul(c[1]);
    r.n = std::stoul(c[2]);
    if (c[3] != "mean") r.seed = std::stoull(c[3]);
    r.ars = detail::parse_double(c[4]);
    r.acs = detail::parse_double(c[5]);
    r.objective = detail::parse_double(c[6]);
    r.matched_pairs = detail::parse_double(c[7]);
    r.accepted_pairs = detail::parse_double(c[8]);
    r.rejection_rate = detail::parse_double(c[9]);
    r.total_task_size = detail::parse_double(c[10]);
    r.max_delay = detail::parse_double(c[11]);
    r.cpu_cycles = detail::parse_double(c[12]);
    r.cache_used = detail::parse_double(c[13]);
    r.energy = detail::parse_double(c[14]);
    r.avg_trade_price = detail::parse_double(c[15]);
    r.cost_slope = opt(c[16]);
    r.income_slope = opt(c[17]);
    r.converged = c[18] == "1";
    r.wall_time = detail::parse_double(c[19]);
    rows.push_back(r);
  }
  return rows;
}

inline void to_json(json& j, const RoundMetrics& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j = json{{"mechanism", r.mechanism},
           {"m", r.m},
           {"n", r.n},
           {"seed", r.seed ? json(*r.seed) : json(nullptr)},
           {"ars", r.ars},
           {"acs", r.acs},
           {"objective", r.objective},
           {"matched_pairs", r.matched_pairs},
           {"accepted_pairs", r.accepted_pairs},
           {"rejection_rate", r.rejection_rate},
           {"total_task_size", r.total_task_size},
           {"max_delay", r.max_delay},
           {"cpu_cycles", r.cpu_cycles},
           {"cache_used", r.cache_used},
           {"energy", r.energy},
           {"avg_trade_price", r.avg_trade_price},
           {"cost_slope", opt(r.cost_slope)},
           {"income_slope", opt(r.income_slope)},
           {"converged", r.converged},
           {"wall_time", r.wall_time}};
}

inline void from_json(const json& j, RoundMetrics& r) {
  auto opt = [&](const char* key) {
    const json& v = j.at(key);
    return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  };
  r.mechanism = j.at("mechanism").get<Mechanism>();
  r.m = j.at("m").get<std::size_t>();
  r.n = j.at("n").get<std::size_t>();
  r.seed.reset();
  if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  r.ars = j.at("ars").get<double>();
  r.acs = j.at("acs").get<double>();
  r.objective = j.at("objective").get<double>();
  r.matched_pairs = j.at("matched_pairs").get<double>();
  r.accepted_pairs = j.at("accepted_pairs").get<double>();
  r.rejection_rate = j.at("rejection_rate").get<double>();
  r.total_task_size = j.at("total_task_size").get<double>();
  r.max_delay = j.at("max_delay").get<double>();
  r.cpu_cycles = j.at("cpu_cycles").get<double>();
  r.cache_used = j.at("cache_used").get<double>();
  r.energy = j.at("energy").get<double>();
  r.avg_trade_price = j.at("avg_trade_price").get<double>();
  r.cost_slope = opt("cost_slope");
  r.income_slope = opt("income_slope");
  r.converged = j.at("converged").get<bool>();
  r.wall_time = j.at("wall_time").get<double>();
}

inline void to_json(json& j, const Report& r) { j = json{{"rows", r.rows}, {"means", r.means}}; }

inline void from_json(const json& j, Report& r) {
  r.rows = j.at("rows").get<std::vector<RoundMetrics>>();
  r.means = j.value("means", std::vector<RoundMetrics>{});
}

enum class ReportFormat { Csv, Json };

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace detail

/// CSV: `path` gets one row per round under the fixed header and the
/// cross-seed means go to a sibling file with a `_means` suffix.
/// JSON: `path` gets {"rows": [...], "means": [...]}.
inline void emit_report(const Report& report, const std::filesystem::path& path,
                        ReportFormat format) {
  if (format == ReportFormat::Json) {
    detail::write_text(path, json(report).dump(2) + '\n');
    return;
  }
  detail::write_text(path, report_csv(report.rows));
  auto means = path;
  means.replace_filename(path.stem().string() + "_means" + path.extension().string());
  detail::write_text(means, report_csv(report.means));
}

}  // namespace mpm
