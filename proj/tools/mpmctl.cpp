// mpmctl: command-line front end for the matching market.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 ledger
// integrity failure, 3 solver did not converge under --strict.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "mpm/mpm.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mpm;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitIntegrity = 2;
constexpr int kExitNotConverged = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

/// Experiment-format config; `match` and `generate` read only the parts they need.
ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return ExperimentConfig{};
  return json::parse(read_file(path)).get<ExperimentConfig>();
}

json matrix_json(const MatchMatrix& X) {
  json rows = json::array();
  for (std::size_t i = 0; i < X.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < X.cols(); ++j) row.push_back(X(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct GenerateArgs {
  std::size_t m = 30, n = 30;
  std::uint64_t seed = 1;
  std::string config, out;
};

int cmd_generate(const GenerateArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const MarketInstance inst = generate_instance(cfg.market, a.m, a.n, a.seed);
  write_output(a.out, json(inst).dump(2) + '\n');
  return kExitOk;
}

struct MatchArgs {
  std::string instance, config, out, chain_dir;
  std::size_t m = 30, n = 30;
  std::uint64_t seed = 1;
  std::string mechanism = "mpm";
  bool strict = false;
};

int cmd_match(const MatchArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const MarketInstance inst = a.instance.empty()
                                  ? generate_instance(cfg.market, a.m, a.n, a.seed)
                                  : json::parse(read_file(a.instance)).get<MarketInstance>();
  validate(inst);
  validate(cfg.round.solver);
  validate(cfg.round.rejection);
  const Mechanism mech = mechanism_from_string(a.mechanism);
  Ledgers ledgers;
  const RoundResult res = run_round(inst, mech, cfg.round, a.seed, ledgers);

  json out{{"mechanism", mech},
           {"seed", a.seed},
           {"requirements", json::array()},
           {"services", json::array()},
           {"matched", matrix_json(res.matched)},
           {"accepted", matrix_json(res.accepted)},
           {"transactions", res.transactions},
           {"metrics", res.metrics}};
  for (const auto& q : res.instance.requirements) out["requirements"].push_back(q.id);
  for (const auto& v : res.instance.services) out["services"].push_back(v.id);
  write_output(a.out, out.dump(2) + '\n');

  if (!a.chain_dir.empty()) {
    fs::create_directories(a.chain_dir);
    const fs::path dir(a.chain_dir);
    write_chain((dir / "transactions.chain").string(), ledgers.transactions);
    write_chain((dir / "requester_reputation.chain").string(), ledgers.requester_reputation);
    write_chain((dir / "collaborator_reputation.chain").string(),
                ledgers.collaborator_reputation);
  }
  if (a.strict && !res.metrics.converged) {
    std::cerr << "solver did not converge within " << cfg.round.solver.max_iterations
              << " iterations\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

struct ExperimentArgs {
  std::string config, out_dir = ".";
  bool strict = false;
};

int cmd_experiment(const ExperimentArgs& a) {
  const ExperimentConfig cfg = load_config(a.config);
  const Report report = run_experiment(cfg);
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  emit_report(report, dir / "report.csv", ReportFormat::Csv);
  emit_report(report, dir / "report.json", ReportFormat::Json);

  std::size_t stalled = 0;
  for (const auto& r : report.rows) stalled += !r.converged;
  std::cout << report.rows.size() << " rounds written to " << dir.string() << '\n';
  if (a.strict && stalled > 0) {
    std::cerr << stalled << " round(s) did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

struct VerifyArgs {
  std::string file;
  bool replay = false;
};

int cmd_verify(const VerifyArgs& a) {
  Chain chain;
  try {
    chain = read_chain(a.file);
  } catch (const IntegrityError& e) {
    std::cout << "FAIL: " << e.what() << " (block " << e.index() << ")\n";
    return kExitIntegrity;
  }
  const VerifyResult r = verify_chain(chain);
  if (!r.ok) {
    std::cout << "FAIL: first bad block " << *r.first_bad << " of " << r.length << '\n';
    return kExitIntegrity;
  }
  if (a.replay) {
    if (auto bad = replay_reputation(chain)) {
      std::cout << "FAIL: reputation replay diverges at block " << *bad << '\n';
      return kExitIntegrity;
    }
  }
  std::cout << "OK: " << r.length << " blocks\n";
  return kExitOk;
}

struct ReportArgs {
  std::string in, out, format = "csv";
};

int cmd_report(const ReportArgs& a) {
  const std::string text = read_file(a.in);
  Report report;
  if (fs::path(a.in).extension() == ".csv") {
    report.rows = parse_report_csv(text);
    fs::path means(a.in);
    means.replace_filename(means.stem().string() + "_means.csv");
    if (fs::exists(means)) report.means = parse_report_csv(read_file(means.string()));
  } else {
    report = json::parse(text).get<Report>();
  }

  if (a.format == "json") {
    if (a.out.empty() || a.out == "-")
      std::cout << json(report).dump(2) << '\n';
    else
      emit_report(report, a.out, ReportFormat::Json);
  } else {
    if (a.out.empty() || a.out == "-")
      std::cout << report_csv(report.rows) << report_csv(report.means);
    else
      emit_report(report, a.out, ReportFormat::Csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-preference matching market for computing resources"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Draw a random market instance");
  generate->add_option("--m", gen.m, "Number of requesters");
  generate->add_option("--n", gen.n, "Number of collaborators");
  generate->add_option("--seed", gen.seed, "Generator seed");
  generate->add_option("--config", gen.config, "Experiment config JSON (market section)");
  generate->add_option("--out,-o", gen.out, "Output file (default stdout)");

  MatchArgs mat;
  auto* match = app.add_subcommand("match", "Run one trading round");
  match->add_option("--instance", mat.instance, "Instance JSON; generated when omitted");
  match->add_option("--m", mat.m, "Requesters when generating");
  match->add_option("--n", mat.n, "Collaborators when generating");
  match->add_option("--seed", mat.seed, "Seed for generation and settlement");
  match->add_option("--mechanism", mat.mechanism, "mpm or da")
      ->check(CLI::IsMember({"mpm", "da", "MPM", "DA"}));
  match->add_option("--config", mat.config, "Experiment config JSON");
  match->add_option("--chain-dir", mat.chain_dir, "Write the round's ledgers here");
  match->add_option("--out,-o", mat.out, "Output file (default stdout)");
  match->add_flag("--strict", mat.strict, "Exit 3 if the solver does not converge");

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand("experiment", "Run a size x seed x mechanism sweep");
  experiment->add_option("--config", exp.config, "Experiment config JSON");
  experiment->add_option("--out-dir", exp.out_dir, "Directory for report files");
  experiment->add_flag("--strict", exp.strict, "Exit 3 if any round does not converge");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify-chain", "Check a ledger file");
  verify->add_option("file,--file", ver.file, "Chain file")->required();
  verify->add_flag("--replay", ver.replay, "Also re-derive every reputation update");

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Convert a report between CSV and JSON");
  report->add_option("--in", rep.in, "report.csv or report.json")->required();
  report->add_option("--format", rep.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--out,-o", rep.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (generate->parsed()) return cmd_generate(gen);
    if (match->parsed()) return cmd_match(mat);
    if (experiment->parsed()) return cmd_experiment(exp);
    if (verify->parsed()) return cmd_verify(ver);
    if (report->parsed()) return cmd_report(rep);
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const json::exception& e) {
    std::cerr << "invalid JSON: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
