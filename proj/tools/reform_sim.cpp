// Copyright 2026 The reform-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// reform_sim: run REFORM experiments and evaluate the closed forms.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "reform/io.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> k;
  std::optional<double> alpha;
  std::optional<std::string> mechanism;
  std::optional<std::uint32_t> rounds;
  std::optional<std::string> decay;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "INI config, or a meta.json from a previous run")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--k", o.k, "Pairing chances per report");
  cmd->add_option("--alpha", o.alpha, "Reward scale");
  cmd->add_option("--mechanism", o.mechanism, "reform-rptsc | rptsc | output-agreement | pts");
  cmd->add_option("--rounds", o.rounds, "Number of rounds");
  cmd->add_option("--decay", o.decay, "constant | exp:RATE | linear:SLOPE");
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
}

reform::SimConfig resolve(const Overrides& o) {
  reform::SimConfig cfg = o.config.empty() ? reform::reference_config() : reform::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.k) cfg.k = *o.k;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.mechanism) cfg.mechanism = reform::parse_mechanism(*o.mechanism);
  if (o.rounds) cfg.rounds = *o.rounds;
  if (o.decay) {
    try {
      cfg.decay = reform::parse_decay(*o.decay);
    } catch (const std::invalid_argument& e) {
      throw reform::ConfigError(e.what());
    }
  }
  return reform::validate_config(cfg);
}

int cmd_simulate(const Overrides& o) {
  const auto cfg = resolve(o);
  const reform::RunOptions run{reform::threads_from_env()};
  const auto result = reform::simulate(cfg, run);
  reform::write_outputs(o.out_dir, result);
  const auto& tail = result.primary.normalized;
  std::printf("%s k=%u alpha=%g seed=%llu rounds=%u\n",
              std::string(reform::mechanism_name(cfg.mechanism)).c_str(), cfg.k, cfg.alpha,
              static_cast<unsigned long long>(cfg.seed), cfg.rounds);
  for (auto tag : {reform::StrategyTag::kTrustworthy, reform::StrategyTag::kRandom,
                   reform::StrategyTag::kSingleReport}) {
    const double v = reform::tail_mean(tail.of(tag), reform::kTailRounds);
    if (!std::isnan(v))
      std::printf("  %s normalized reward (last %zu rounds): %.4f\n",
                  std::string(reform::tag_name(tag)).c_str(), reform::kTailRounds, v);
  }
  std::printf("wrote %s\n", o.out_dir.c_str());
  return 0;
}

int cmd_figure1(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto fig = reform::figure1(cfg, reform::RunOptions{reform::threads_from_env()});
  std::filesystem::create_directories(o.out_dir);
  std::ostringstream csv;
  reform::write_figure_csv(csv, fig);
  const auto path = std::filesystem::path(o.out_dir) / "figure1.csv";
  reform::write_text(path, csv.str());
  std::printf("%-4s %-3s %9s %9s\n", "k", "", "N-REFORM", "N-RPTSC");
  for (const auto& [k, run] : fig.reform)
    for (auto tag : {reform::StrategyTag::kTrustworthy, reform::StrategyTag::kRandom})
      std::printf("%-4u %-3s %9.4f %9.4f\n", k, std::string(reform::tag_name(tag)).c_str(),
                  reform::tail_mean(run.normalized.of(tag), reform::kTailRounds),
                  reform::tail_mean(fig.baseline.normalized.of(tag), reform::kTailRounds));
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

void print_table(const nlohmann::ordered_json& a) {
  auto num = [](const nlohmann::ordered_json& v) {
    if (v.is_number()) return std::to_string(v.get<double>());
    return v.dump();
  };
  for (const auto& row : a["per_evaluation"]) {
    std::printf("x=%zu  q=%.6g  q'=%.6g\n", row["x"].get<std::size_t>(), row["q"].get<double>(),
                row["q_post"].get<double>());
    std::printf("  %-22s %s\n", "E' (RPTSC)", num(row["E_rptsc"]).c_str());
    std::printf("  %-22s %s\n", "M' (optimal)", num(row["M_optimal"]).c_str());
    std::printf("  %-22s %s\n", "REFORM, two chances", num(row["E_reform_k2"]).c_str());
    for (const auto& [k, v] : row["E_reform_k"].items())
      std::printf("  %-22s %s\n", ("REFORM, k=" + k).c_str(), num(v).c_str());
    std::printf("  %-22s %s\n", "E_ra (random report)", num(row["E_random"]).c_str());
  }
  std::printf("%-24s %s\n", "R (pre-eval RPTSC)", num(a["R_pre_rptsc"]).c_str());
  std::printf("%-24s %s\n", "Ref (pre-eval REFORM)", num(a["R_pre_reform"]).c_str());
  std::printf("%-24s %s\n", "E_ra (prior average)", num(a["E_random_prior"]).c_str());
  std::printf("%-24s %s\n", "delta", num(a["delta"]).c_str());
  if (a["assumptions"].is_object())
    for (const auto& [name, v] : a["assumptions"].items())
      std::printf("%-24s %s\n", ("assumption " + name).c_str(), v.get<bool>() ? "true" : "false");
  else
    std::printf("%-24s %s\n", "assumptions", a["assumptions"].get<std::string>().c_str());
  std::printf("%-24s %s\n", "effort incentive", a["effort_incentive"].get<bool>() ? "true" : "false");
  std::printf("%-24s %s\n", "truthful margin", a["truthful_margin"].get<bool>() ? "true" : "false");
  std::printf("%-24s %s\n", "gamma RPTSC", num(a["gamma_rptsc"]).c_str());
  std::printf("%-24s %s\n", "gamma REFORM", num(a["gamma_reform"]).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"REFORM peer-prediction experiments"};
  app.require_subcommand(1);

  Overrides sim_opts, fig_opts;
  auto* simulate = app.add_subcommand("simulate", "Run one experiment and write rounds.csv, summary.json, meta.json");
  add_common(simulate, sim_opts);
  auto* figure = app.add_subcommand("figure1", "RPTSC baseline and REFORM at k = 2, 4, 8 as one CSV");
  add_common(figure, fig_opts);

  std::string beliefs_path;
  bool as_json = false;
  std::uint32_t k_max = 8;
  double cost_high = 1.0, cost_low = 0.0;
  auto* analyze = app.add_subcommand("analyze", "Evaluate the closed forms for a beliefs file");
  analyze->add_option("beliefs", beliefs_path, "Beliefs JSON")->required()->check(CLI::ExistingFile);
  analyze->add_flag("--json", as_json, "Print JSON instead of a table");
  analyze->add_option("--k-max", k_max, "Largest k for the general series")->check(CLI::PositiveNumber);
  analyze->add_option("--cost-high", cost_high, "Cost of high effort");
  analyze->add_option("--cost-low", cost_low, "Cost of low effort");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(sim_opts);
    if (*figure) return cmd_figure1(fig_opts);
    const auto b = reform::load_beliefs(beliefs_path);
    const auto a = reform::analysis_json(b, cost_high, cost_low, k_max);
    if (as_json)
      std::cout << a.dump(2) << '\n';
    else
      print_table(a);
    return 0;
  } catch (const reform::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
