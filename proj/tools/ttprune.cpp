// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

// ttprune: run experiments, solve one allocation round, evaluate the bound.
//
//   ttprune run   CONFIG [-o DIR] [--seed N] [--schemes a,b] [--parallel N] [--checkpoints]
//   ttprune solve CONFIG [--csv]
//   ttprune bound CONFIG RHO_CSV [--gap X]
//
// Exit status: 0 success, 2 configuration error, 3 infeasible, 4 I/O error.

#include "ttprune/allocator.hpp"
#include "ttprune/bound.hpp"
#include "ttprune/config.hpp"
#include "ttprune/detail/file_io.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/fedsim.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace ttprune;

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level log_level() {
  static const Level level = [] {
    const char *env = std::getenv("TTPRUNE_LOG");
    const std::string v = env ? env : "";
    if (v == "error") return Level::kError;
    if (v == "warn") return Level::kWarn;
    if (v == "debug") return Level::kDebug;
    return Level::kInfo;
  }();
  return level;
}

void log(Level level, const std::string &msg) {
  static const char *names[] = {"error", "warn", "info", "debug"};
  if (level <= log_level()) {
    std::cerr << "ttprune: " << names[static_cast<int>(level)] << ": " << msg << '\n';
  }
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    out.push_back(item);
  }
  return out;
}

struct RunArgs {
  std::string config;
  std::string output = "out";
  std::optional<std::uint64_t> seed;
  std::string schemes;
  std::optional<std::size_t> parallel;
  bool checkpoints = false;
};

int cmd_run(const RunArgs &a) {
  auto cfg = config::load_config(a.config);
  if (a.seed) {
    cfg.seed = *a.seed;
  }
  if (!a.schemes.empty()) {
    cfg.schemes.clear();
    for (const auto &name : split(a.schemes, ',')) {
      cfg.schemes.push_back(fedsim::parse_scheme(name));
    }
  }
  if (a.parallel) {
    if (*a.parallel < 1) {
      throw ConfigError("--parallel must be >= 1");
    }
    cfg.parallel = *a.parallel;
  }
  auto setup = config::prepare_experiment(cfg);
  const std::filesystem::path out_dir(a.output);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out_dir.string());
  }
  if (a.checkpoints) {
    setup.checkpoint_dir = out_dir / "checkpoints";
  }
  log(Level::kInfo, "dT = " + g17(setup.net.delta_t_s) + " s, " +
                        std::to_string(setup.devices.size()) + " devices, " +
                        std::to_string(setup.rounds) + " rounds");

  for (auto scheme : cfg.schemes) {
    const std::string name(fedsim::scheme_name(scheme));
    log(Level::kInfo, "running " + name);
    const auto result = fedsim::run_experiment(scheme, setup);
    auto consts = setup.consts;
    consts.tier_count = result.plan.tier_count;
    if (!cfg.xi_given) {
      consts.xi = result.plan.tier_count / 2.0;
    }
    const auto report = config::run_bound_report(result, consts);
    detail::write_text_file(out_dir / (name + "_metrics.csv"),
                            fedsim::format_metrics_csv(scheme, result.rounds));
    detail::write_text_file(out_dir / (name + "_summary.json"),
                            config::summary_json(result, cfg, report));
    const double acc = result.rounds.empty() ? result.initial.accuracy
                                             : result.rounds.back().accuracy;
    log(Level::kInfo, name + ": M = " + std::to_string(result.plan.tier_count) +
                          ", final accuracy " + g17(acc));
  }
  return 0;
}

int cmd_solve(const std::string &config_path, bool csv) {
  const auto cfg = config::load_config(config_path);
  netmodel::NetworkConfig net;
  const auto tiers = config::solve_profiles(cfg, net);
  auto consts = cfg.bound;
  int max_tier = 1;
  for (const auto &t : tiers) {
    max_tier = std::max(max_tier, t.tier_index);
  }
  consts.tier_count = max_tier;
  if (!cfg.xi_given) {
    consts.xi = max_tier / 2.0;
  }
  allocator::validate(consts);
  const auto d = allocator::solve_lambda(tiers, net, consts, cfg.local_epochs);
  if (csv) {
    std::cout << "tier,b_star,rho_star,lambda_star,objective\n";
    for (const auto &t : d.tiers) {
      std::cout << t.tier_index << ',' << g17(t.bandwidth_fraction) << ','
                << g17(t.pruning_ratio) << ',' << g17(d.lambda_star) << ','
                << g17(d.objective_value) << '\n';
    }
  } else {
    std::cout << "delta_t_s   " << g17(net.delta_t_s) << '\n'
              << "lambda_star " << g17(d.lambda_star) << '\n'
              << "objective   " << g17(d.objective_value) << '\n';
    for (const auto &t : d.tiers) {
      std::cout << "tier " << t.tier_index << "  b* = " << g17(t.bandwidth_fraction)
                << "  rho* = " << g17(t.pruning_ratio) << '\n';
    }
  }
  return 0;
}

/// rho history K x M from a CSV with round, tier and rho_star columns.
struct RhoCsv {
  std::vector<std::vector<double>> history;
  std::optional<double> gap; // from a loss column, when present
};

RhoCsv read_rho_csv(const std::string &path, std::size_t tier_count) {
  const auto text = detail::read_text_file(path);
  const auto lines = split(text, '\n');
  if (lines.empty()) {
    throw FormatError(path + ": empty file");
  }
  auto header = split(lines[0], ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto h = header[i];
    if (!h.empty() && h.back() == '\r') {
      h.pop_back();
    }
    col[h] = i;
  }
  for (const char *need : {"round", "tier", "rho_star"}) {
    if (!col.contains(need)) {
      throw FormatError(path + ": missing column '" + std::string(need) + "'");
    }
  }
  std::map<int, std::map<int, double>> rows;
  std::map<int, double> loss;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i] == "\r") {
      continue;
    }
    const auto f = split(lines[i], ',');
    if (f.size() < header.size()) {
      throw FormatError(path + ": line " + std::to_string(i + 1) + " is short");
    }
    try {
      const int k = std::stoi(f[col["round"]]);
      const int m = std::stoi(f[col["tier"]]);
      if (k < 1 || m < 1 || static_cast<std::size_t>(m) > tier_count) {
        throw FormatError(path + ": round/tier out of range on line " + std::to_string(i + 1));
      }
      rows[k][m] = std::stod(f[col["rho_star"]]);
      if (col.contains("loss")) {
        loss[k] = std::stod(f[col["loss"]]);
      }
    } catch (const std::logic_error &) {
      throw FormatError(path + ": bad number on line " + std::to_string(i + 1));
    }
  }
  RhoCsv out;
  const int rounds = rows.empty() ? 0 : rows.rbegin()->first;
  out.history.assign(static_cast<std::size_t>(rounds), std::vector<double>(tier_count, 0.0));
  for (const auto &[k, tiers] : rows) {
    for (const auto &[m, rho] : tiers) {
      out.history[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(m - 1)] = rho;
    }
  }
  if (!loss.empty()) {
    double best = loss.begin()->second;
    for (const auto &[k, l] : loss) {
      best = std::min(best, l);
    }
    out.gap = loss.begin()->second - best;
  }
  return out;
}

int cmd_bound(const std::string &config_path, const std::string &csv_path,
              std::optional<double> gap) {
  const auto cfg = config::load_config(config_path);
  netmodel::NetworkConfig net;
  const auto tiers = config::solve_profiles(cfg, net);
  int max_tier = 1;
  for (const auto &t : tiers) {
    max_tier = std::max(max_tier, t.tier_index);
  }
  // Dense tier list 1..M; tiers without members contribute nothing.
  std::vector<allocator::TierProfile> dense(static_cast<std::size_t>(max_tier));
  for (int m = 1; m <= max_tier; ++m) {
    dense[static_cast<std::size_t>(m - 1)].tier_index = m;
    dense[static_cast<std::size_t>(m - 1)].user_count = 0;
    dense[static_cast<std::size_t>(m - 1)].data_count = 1.0;
  }
  for (const auto &t : tiers) {
    dense[static_cast<std::size_t>(t.tier_index - 1)] = t;
  }
  auto consts = cfg.bound;
  if (!cfg.xi_given) {
    consts.xi = max_tier / 2.0;
  }
  const auto rho = read_rho_csv(csv_path, dense.size());
  const double f_gap = gap ? *gap : rho.gap.value_or(0.0);
  const auto r = bound::evaluate_bound(consts, dense, rho.history,
                                       static_cast<int>(rho.history.size()), f_gap);
  std::cout << "rounds       " << rho.history.size() << '\n'
            << "tiers        " << dense.size() << '\n'
            << "f_init_gap   " << g17(f_gap) << '\n'
            << "term_init    " << g17(r.term_init) << '\n'
            << "term_pruning " << g17(r.term_pruning) << '\n'
            << "term_drift   " << g17(r.term_drift) << '\n'
            << "term_mixed   " << g17(r.term_mixed) << '\n'
            << "omega1       " << g17(r.omega1) << '\n'
            << "omega2       " << g17(r.omega2) << '\n'
            << "rhs_total    " << g17(r.rhs_total) << '\n';
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Time-triggered federated learning with joint pruning and bandwidth allocation"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto *run = app.add_subcommand("run", "Run the configured schemes and write metrics");
  run->add_option("config", run_args.config, "Config file (JSON)")->required();
  run->add_option("-o,--output", run_args.output, "Output directory");
  run->add_option("--seed", run_args.seed, "Master seed override");
  run->add_option("--schemes", run_args.schemes,
                  "Comma-separated subset: tt_prune,equal_resource,fedavg,no_pruning");
  run->add_option("--parallel", run_args.parallel, "Worker threads for local updates");
  run->add_flag("--checkpoints", run_args.checkpoints,
                "Write per-round global models and masks under OUTPUT/checkpoints");

  std::string solve_config;
  bool solve_csv = false;
  auto *solve = app.add_subcommand("solve", "Solve one round's bandwidth/pruning allocation");
  solve->add_option("config", solve_config, "Config file (JSON)")->required();
  solve->add_flag("--csv", solve_csv, "One CSV row per tier");

  std::string bound_config;
  std::string bound_csv;
  std::optional<double> bound_gap;
  auto *bnd = app.add_subcommand("bound", "Evaluate the convergence bound for a rho history");
  bnd->add_option("config", bound_config, "Config file (JSON)")->required();
  bnd->add_option("rho_csv", bound_csv, "CSV with round,tier,rho_star columns")->required();
  bnd->add_option("--gap", bound_gap, "E[F(w0)] - F(w*); default from a loss column or 0");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      return cmd_run(run_args);
    }
    if (*solve) {
      return cmd_solve(solve_config, solve_csv);
    }
    return cmd_bound(bound_config, bound_csv, bound_gap);
  } catch (const ConfigError &e) {
    log(Level::kError, e.what());
    return 2;
  } catch (const InfeasibleError &e) {
    log(Level::kError, std::string(e.what()) + " (tier " + std::to_string(e.tier_index()) + ")");
    return 3;
  } catch (const IoError &e) {
    log(Level::kError, e.what());
    return 4;
  } catch (const std::exception &e) {
    log(Level::kError, e.what());
    return 1;
  }
}
