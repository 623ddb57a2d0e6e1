// SPDX-License-Identifier: Apache-2.0
//
// mimose: theory / simulation / threshold / lemma-check workflows with CSV
// output.  Exit codes: 0 success, 2 configuration error, 3 systemic
// numeric failure.

#include "mimose/config_io.hpp"
#include "mimose/csv.hpp"
#include "mimose/mc_harness.hpp"
#include "mimose/oracles.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

namespace {

using namespace mimose;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;
  long trials = 500;
  std::vector<long> nr_grid;
  std::vector<long> nq_grid;
  std::vector<std::string> kind_names;
  std::string link = "both";
};

std::vector<Link> parse_links(const std::string& name) {
  if (name == "both") return {Link::kUplink, Link::kDownlink};
  return {link_from_string(name)};
}

std::vector<EstimatorKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<EstimatorKind> kinds;
  if (names.empty()) {
    kinds = {EstimatorKind::kLmmse, EstimatorKind::kElLmmse,
             EstimatorKind::kLmmseType, EstimatorKind::kElLmmseType,
             EstimatorKind::kElLmmseTypeRegP};
  } else {
    for (const auto& n : names) kinds.push_back(estimator_kind_from_string(n));
  }
  return kinds;
}

const std::vector<std::string> kSeHeader = {
    "kind",    "link",    "M",       "L",       "K",
    "P",       "C_u",     "tau_s",   "N_R",     "N_Q",
    "alpha_R", "alpha_Q", "prelog",  "gamma",   "se_theory",
    "se_sim",  "sim_stderr", "n_trials", "status"};

void write_se_csv(const RunConfig& cfg, const SweepResult& sweep,
                  bool with_sim, const std::string& out_path) {
  CsvWriter csv(kSeHeader);
  for (const auto& cell : sweep.cells) {
    const bool ok = cell.status == "ok";
    const bool ul = cell.link == Link::kUplink;
    std::vector<std::string> row;
    row.push_back(to_string(cell.kind));
    row.push_back(to_string(cell.link));
    row.push_back(std::to_string(cfg.scenario.M));
    row.push_back(std::to_string(cfg.scenario.L));
    row.push_back(std::to_string(cfg.scenario.K));
    row.push_back(std::to_string(cfg.scenario.P));
    row.push_back(std::to_string(cfg.scenario.C_u));
    row.push_back(std::to_string(cfg.scenario.tau_s));
    row.push_back(std::to_string(cell.n_r));
    row.push_back(std::to_string(cell.n_q));
    row.push_back(format_number(cfg.reg_r.alpha_R));
    row.push_back(format_number(cfg.reg_p.alpha_Q));
    // DL SE carries no pre-log factor; the cell stays empty.
    row.push_back(ok && ul ? format_number(cell.prelog) : "");
    row.push_back(ok ? format_number(cell.gamma_theory) : "");
    row.push_back(ok ? format_number(cell.se_theory) : "");
    row.push_back(with_sim && cell.has_sim ? format_number(cell.se_sim) : "");
    row.push_back(with_sim && cell.has_sim ? format_number(cell.sim_stderr)
                                           : "");
    row.push_back(with_sim && cell.has_sim ? std::to_string(cell.n_trials)
                                           : "");
    row.push_back(cell.status);
    csv.add_row(row);
  }
  csv.write_file(out_path);
}

int run_theory_or_simulate(const CommonArgs& args, bool simulate) {
  const RunConfig cfg = load_config(args.config_path, args.overrides);
  const CovarianceSet cov = build_covariance_set(cfg.scenario);

  SweepSpec spec;
  spec.nr_grid = args.nr_grid.empty() ? std::vector<long>{cfg.budget.N_R}
                                      : args.nr_grid;
  spec.nq_grid = args.nq_grid.empty() ? std::vector<long>{cfg.budget.N_Q}
                                      : args.nq_grid;
  spec.kinds = parse_kinds(args.kind_names);
  spec.links = parse_links(args.link);
  spec.n_trials = simulate ? args.trials : 0;
  spec.base_seed = args.seed;

  const SweepResult sweep = run_sweep(cov, cfg.scenario.target_user,
                                      cfg.budget, cfg.reg_r, cfg.reg_p, spec);
  write_se_csv(cfg, sweep, simulate, args.out_path);

  long ok_cells = 0;
  for (const auto& cell : sweep.cells) ok_cells += cell.status == "ok";
  std::cerr << "wrote " << sweep.cells.size() << " rows (" << ok_cells
            << " ok) to " << args.out_path << "\n";
  return ok_cells == 0 && !sweep.cells.empty() ? kExitNumeric : kExitOk;
}

int run_threshold(const CommonArgs& args) {
  const RunConfig cfg = load_config(args.config_path, args.overrides);
  const CovarianceSet cov = build_covariance_set(cfg.scenario);
  const int u = cfg.scenario.target_user;

  const std::vector<long> nq_grid =
      args.nq_grid.empty() ? std::vector<long>{cfg.budget.N_Q} : args.nq_grid;
  long nq_hi = 0;
  for (long v : nq_grid) nq_hi = std::max(nq_hi, v);

  CsvWriter csv({"link", "N_Q", "M", "L", "K", "alpha_R", "a", "b", "c", "f",
                 "g", "h", "d", "nr_threshold", "nq_star", "status"});
  bool any_ok = false;
  for (Link link : parse_links(args.link)) {
    std::optional<long> nq_star;
    std::string nq_star_status = "ok";
    try {
      nq_star = nq_threshold(cov, u, cfg.reg_r, link, cov.M + 2, nq_hi);
    } catch (const std::exception& e) {
      nq_star_status = e.what();
    }
    for (long n_q : nq_grid) {
      std::vector<std::string> row;
      row.push_back(to_string(link));
      row.push_back(std::to_string(n_q));
      row.push_back(std::to_string(cov.M));
      row.push_back(std::to_string(cov.L));
      row.push_back(std::to_string(cov.K));
      row.push_back(format_number(cfg.reg_r.alpha_R));
      try {
        const ThresholdResult res = nr_threshold(cov, u, n_q, cfg.reg_r, link);
        const auto& c = res.coeffs;
        for (double v : {c.a, c.b, c.c, c.f, c.g, c.h, c.d})
          row.push_back(format_number(v));
        row.push_back(res.n_r_bar ? format_number(*res.n_r_bar) : "none");
        row.push_back(nq_star ? std::to_string(*nq_star) : "none");
        row.push_back(nq_star_status == "ok" ? "ok" : nq_star_status);
        any_ok = true;
      } catch (const std::exception& e) {
        for (int i = 0; i < 7; ++i) row.push_back("");
        row.push_back("");
        row.push_back("");
        row.push_back(e.what());
      }
      csv.add_row(row);
    }
  }
  csv.write_file(args.out_path);
  std::cerr << "wrote thresholds to " << args.out_path << "\n";
  return any_ok ? kExitOk : kExitNumeric;
}

int run_lemmas_check(const CommonArgs& args) {
  const auto rows = oracles::run_lemma_suite(args.seed);
  CsvWriter csv({"lemma", "identity", "instances", "samples", "max_sigma",
                 "pass"});
  bool all_pass = true;
  for (const auto& row : rows) {
    csv.add_row({row.lemma, row.identity, std::to_string(row.instances),
                 std::to_string(row.samples), format_number(row.max_sigma),
                 row.pass ? "true" : "false"});
    all_pass = all_pass && row.pass;
  }
  csv.write_file(args.out_path);
  std::cerr << "wrote " << rows.size() << " lemma-check rows to "
            << args.out_path << (all_pass ? " (all pass)" : " (FAILURES)")
            << "\n";
  return all_pass ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-efficiency engine for massive MIMO with estimated "
               "spatial covariance matrices"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", args.config_path, "JSON configuration file")
          ->required();
    sub->add_option("--out", args.out_path, "output CSV path")->required();
    sub->add_option("--seed", args.seed, "base seed");
    sub->add_option("--set", args.overrides,
                    "config override key=value (repeatable)");
    sub->add_option("--nr-grid", args.nr_grid, "comma-separated N_R values")
        ->delimiter(',');
    sub->add_option("--nq-grid", args.nq_grid, "comma-separated N_Q values")
        ->delimiter(',');
    sub->add_option("--kinds", args.kind_names,
                    "estimator kinds (lmmse, el-lmmse, lmmse-type, "
                    "el-lmmse-type, el-lmmse-type-regp)")
        ->delimiter(',');
    sub->add_option("--link", args.link, "ul, dl or both");
  };

  CLI::App* theory = app.add_subcommand(
      "theory", "closed-form SE grid (no simulation columns)");
  add_common(theory, true);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "theoretical and simulated SE over the grid");
  add_common(simulate, true);
  simulate->add_option("--trials", args.trials, "Monte Carlo trials per cell");

  CLI::App* threshold = app.add_subcommand(
      "threshold", "N_R crossing point and N_Q threshold per link");
  add_common(threshold, true);

  CLI::App* lemmas = app.add_subcommand(
      "lemmas-check", "closed-form moment identities vs Monte Carlo oracles");
  lemmas->add_option("--out", args.out_path, "output CSV path")->required();
  lemmas->add_option("--seed", args.seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (theory->parsed()) return run_theory_or_simulate(args, false);
    if (simulate->parsed()) return run_theory_or_simulate(args, true);
    if (threshold->parsed()) return run_threshold(args);
    if (lemmas->parsed()) return run_lemmas_check(args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
