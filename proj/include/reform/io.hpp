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

#pragma once

// Configuration files and experiment output serialization.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "reform/analytics.hpp"
#include "reform/core_model.hpp"
#include "reform/decay.hpp"
#include "reform/metrics.hpp"
#include "reform/simulator.hpp"

namespace reform {

/// Flat "section.key" → value view of a configuration.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline double parse_real(const std::string& text, const std::string& key) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

template <class Int>
Int parse_integer(const std::string& text, const std::string& key) {
  const std::string s = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline std::vector<double> parse_reals(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_real(item, key));
  return out;
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

inline std::string join_reals(const std::vector<double>& values) {
  std::vector<std::string> items;
  for (double v : values) items.push_back(format_exact(v));
  return join(items);
}

struct ConfigField {
  enum Kind { kText, kInteger, kReal };
  const char* key;
  Kind kind;
  std::function<std::string(const SimConfig&)> get;
  std::function<void(SimConfig&, const std::string&, const std::string&)> set;
};

template <class Int>
ConfigField integer_field(const char* key, Int SimConfig::*member) {
  return {key, ConfigField::kInteger, [member](const SimConfig& c) { return std::to_string(c.*member); },
          [member](SimConfig& c, const std::string& v, const std::string& k) {
            c.*member = parse_integer<Int>(v, k);
          }};
}

inline ConfigField real_field(const char* key, std::function<double&(SimConfig&)> ref) {
  return {key, ConfigField::kReal,
          [ref](const SimConfig& c) { return format_exact(ref(const_cast<SimConfig&>(c))); },
          [ref](SimConfig& c, const std::string& v, const std::string& k) {
            ref(c) = parse_real(v, k);
          }};
}

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    f.push_back(integer_field("experiment.rounds", &SimConfig::rounds));
    f.push_back(integer_field("experiment.tasks", &SimConfig::tasks));
    f.push_back(integer_field("experiment.agents", &SimConfig::agents));
    f.push_back(integer_field("experiment.agents_per_task", &SimConfig::agents_per_task));
    f.push_back({"experiment.answers", ConfigField::kText,
                 [](const SimConfig& c) { return join(c.answers); },
                 [](SimConfig& c, const std::string& v, const std::string&) {
                   c.answers = split_list(v);
                 }});
    f.push_back({"experiment.truth_prior", ConfigField::kText,
                 [](const SimConfig& c) { return join_reals(c.truth_prior); },
                 [](SimConfig& c, const std::string& v, const std::string& k) {
                   c.truth_prior = parse_reals(v, k);
                 }});
    f.push_back(real_field("experiment.deadline", [](SimConfig& c) -> double& { return c.deadline; }));
    f.push_back(integer_field("experiment.seed", &SimConfig::seed));

    f.push_back({"mechanism.name", ConfigField::kText,
                 [](const SimConfig& c) { return std::string(mechanism_name(c.mechanism)); },
                 [](SimConfig& c, const std::string& v, const std::string&) {
                   c.mechanism = parse_mechanism(trim(v));
                 }});
    f.push_back(integer_field("mechanism.k", &SimConfig::k));
    f.push_back(real_field("mechanism.alpha", [](SimConfig& c) -> double& { return c.alpha; }));
    f.push_back(real_field("mechanism.baseline_alpha",
                           [](SimConfig& c) -> double& { return c.baseline_alpha; }));
    f.push_back({"mechanism.decay", ConfigField::kText,
                 [](const SimConfig& c) { return decay_to_string(c.decay); },
                 [](SimConfig& c, const std::string& v, const std::string&) {
                   try {
                     c.decay = parse_decay(trim(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(e.what());
                   }
                 }});
    f.push_back(integer_field("mechanism.sample_size", &SimConfig::sample_size));

    f.push_back(real_field("term.lambda", [](SimConfig& c) -> double& { return c.lambda; }));
    f.push_back(real_field("term.gompertz_a", [](SimConfig& c) -> double& { return c.gompertz.a; }));
    f.push_back(real_field("term.gompertz_b", [](SimConfig& c) -> double& { return c.gompertz.b; }));
    f.push_back(real_field("term.gompertz_c", [](SimConfig& c) -> double& { return c.gompertz.c; }));

    f.push_back(real_field("population.trustworthy",
                           [](SimConfig& c) -> double& { return c.mix.trustworthy; }));
    f.push_back(real_field("population.random", [](SimConfig& c) -> double& { return c.mix.random; }));
    f.push_back(real_field("population.single_report",
                           [](SimConfig& c) -> double& { return c.mix.single_report; }));
    f.push_back(real_field("population.ta_accuracy",
                           [](SimConfig& c) -> double& { return c.ta_accuracy; }));
    f.push_back(real_field("population.ta_time_lo", [](SimConfig& c) -> double& { return c.ta_time.lo; }));
    f.push_back(real_field("population.ta_time_hi", [](SimConfig& c) -> double& { return c.ta_time.hi; }));
    f.push_back({"population.ra_prior", ConfigField::kText,
                 [](const SimConfig& c) { return join_reals(c.ra_prior); },
                 [](SimConfig& c, const std::string& v, const std::string& k) {
                   c.ra_prior = parse_reals(v, k);
                 }});
    f.push_back(real_field("population.ra_time_lo", [](SimConfig& c) -> double& { return c.ra_time.lo; }));
    f.push_back(real_field("population.ra_time_hi", [](SimConfig& c) -> double& { return c.ra_time.hi; }));
    f.push_back(integer_field("population.single_report_answer", &SimConfig::single_report_answer));
    f.push_back(real_field("population.sr_time_lo", [](SimConfig& c) -> double& { return c.sr_time.lo; }));
    f.push_back(real_field("population.sr_time_hi", [](SimConfig& c) -> double& { return c.sr_time.hi; }));

    f.push_back(real_field("costs.high", [](SimConfig& c) -> double& { return c.cost_high; }));
    f.push_back(real_field("costs.low", [](SimConfig& c) -> double& { return c.cost_low; }));
    return f;
  }();
  return fields;
}

}  // namespace detail

/// Every field of `cfg`, numbers in shortest round-trip form.
inline ConfigMap config_to_map(const SimConfig& cfg) {
  ConfigMap out;
  for (const auto& field : detail::config_fields()) out[field.key] = field.get(cfg);
  return out;
}

/// Applies `values` over `base`; unknown keys are rejected. The result is
/// not validated.
inline SimConfig config_from_map(const ConfigMap& values, SimConfig base = {}) {
  const auto& fields = detail::config_fields();
  for (const auto& [key, value] : values) {
    auto it = std::find_if(fields.begin(), fields.end(),
                           [&](const auto& f) { return key == f.key; });
    if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(base, value, key);
  }
  return base;
}

inline ConfigMap parse_ini(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ConfigMap out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) out[section + "." + key] = value.data();
  }
  return out;
}

inline void write_ini(std::ostream& out, const SimConfig& cfg) {
  std::string current;
  for (const auto& field : detail::config_fields()) {
    const std::string key = field.key;
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      out << (current.empty() ? "" : "\n") << '[' << section << "]\n";
      current = section;
    }
    out << key.substr(dot + 1) << " = " << field.get(cfg) << '\n';
  }
}

/// Nested {section: {key: value}} object; numeric fields become numbers.
inline nlohmann::ordered_json config_to_json(const SimConfig& cfg) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& field : detail::config_fields()) {
    const std::string key = field.key;
    const auto dot = key.find('.');
    const std::string text = field.get(cfg);
    auto& slot = out[key.substr(0, dot)][key.substr(dot + 1)];
    switch (field.kind) {
      case detail::ConfigField::kText: slot = text; break;
      case detail::ConfigField::kInteger: slot = detail::parse_integer<std::uint64_t>(text, key); break;
      case detail::ConfigField::kReal: slot = detail::parse_real(text, key); break;
    }
  }
  return out;
}

inline ConfigMap config_map_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: JSON object expected");
  ConfigMap out;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      std::string text;
      if (value.is_string())
        text = value.get<std::string>();
      else if (value.is_number_unsigned())
        text = std::to_string(value.get<std::uint64_t>());
      else if (value.is_number_integer())
        text = std::to_string(value.get<std::int64_t>());
      else if (value.is_number())
        text = format_exact(value.get<double>());
      else
        throw ConfigError("config: '" + section + "." + key + "' must be a string or number");
      out[section + "." + key] = text;
    }
  }
  return out;
}

/// Reads an INI file, or a JSON file (a meta.json with a "config" member,
/// or a bare config object) when the extension is ".json".
inline SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (j.contains("config")) j = j["config"];
    return config_from_map(config_map_from_json(j));
  }
  return config_from_map(parse_ini(in));
}

/// Beliefs from JSON: either explicit {"prior", "posterior"} or
/// {"answers", "diagonal"} for a uniform prior with a symmetric posterior,
/// plus "r", "n", "alpha" and optional "beta".
inline BeliefModel beliefs_from_json(const nlohmann::json& j) {
  try {
    BeliefModel b;
    const double r = j.at("r").get<double>();
    const auto n = j.at("n").get<std::uint32_t>();
    const double alpha = j.at("alpha").get<double>();
    const double beta = j.value("beta", 1.0);
    if (j.contains("diagonal")) {
      b = symmetric_beliefs(j.at("answers").get<std::size_t>(), j.at("diagonal").get<double>(), r, n,
                            alpha, beta);
    } else {
      b.prior = j.at("prior").get<std::vector<double>>();
      b.posterior = j.at("posterior").get<std::vector<std::vector<double>>>();
      b.r = r;
      b.n = n;
      b.alpha = alpha;
      b.beta = beta;
    }
    validate_beliefs(b);
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("beliefs: ") + e.what());
  }
}

inline BeliefModel load_beliefs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read beliefs '" + path.string() + "'");
  try {
    return beliefs_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("beliefs: ") + e.what());
  }
}

/// Every closed form evaluated at `b`, one row per evaluation x.
inline nlohmann::ordered_json analysis_json(const BeliefModel& b, double cost_high, double cost_low,
                                           std::uint32_t k_max) {
  nlohmann::ordered_json out;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t x = 0; x < b.answers(); ++x) {
    const double q = b.p(x), qp = b.p_post(x);
    nlohmann::ordered_json row;
    row["x"] = x;
    row["q"] = q;
    row["q_post"] = qp;
    row["E_rptsc"] = b.beta * expected_reward_rptsc(q, qp, b.n, b.alpha);
    row["M_optimal"] = b.beta * optimal_reward(q, b.n, b.alpha);
    row["E_reform_k2"] = expected_reward_reform_k2(q, qp, b.r, b.n, b.alpha, b.beta);
    nlohmann::ordered_json series = nlohmann::ordered_json::object();
    for (std::uint32_t k = 1; k <= k_max; ++k)
      series[std::to_string(k)] = expected_reward_reform_k(q, qp, b.r, b.n, b.alpha, b.beta, k);
    row["E_reform_k"] = series;
    row["E_random"] = expected_reward_random(q, b.r, b.n, b.alpha, b.beta);
    rows.push_back(row);
  }
  out["per_evaluation"] = rows;
  out["R_pre_rptsc"] = pre_eval_expected_rptsc(b);
  out["R_pre_reform"] = pre_eval_expected_reform(b);
  out["E_random_prior"] = expected_reward_random_prior(b);
  try {
    const auto rep = check_assumptions(b, cost_high, cost_low);
    out["delta"] = rep.delta;
    out["assumptions"] = {{"A", rep.a}, {"A1", rep.a1}, {"B1", rep.b1}, {"B2", rep.b2}};
  } catch (const std::domain_error& e) {
    out["delta"] = nullptr;
    out["assumptions"] = e.what();
  }
  out["effort_incentive"] = effort_incentive_holds(b, cost_high, cost_low);
  out["truthful_margin"] = truthful_margin_holds(b);
  auto gamma = [](const GammaFairness& g) -> nlohmann::ordered_json {
    if (std::isinf(g.gamma)) return "inf";
    return g.gamma;
  };
  out["gamma_rptsc"] = gamma(gamma_rptsc(b));
  out["gamma_reform"] = gamma(gamma_reform(b));
  return out;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline constexpr const char* kRoundsCsvHeader =
    "round,strategy,mechanism,mean_reward,normalized_reward,budget";
inline constexpr const char* kFigureCsvHeader = "round,k,strategy,curve,normalized_reward";

/// A finished run together with the reference reward used to normalize it.
struct MechanismRun {
  ExperimentRecord record;
  NormalizedSeries normalized;
};

inline MechanismRun make_run(const SimConfig& cfg, RunOptions options = {}) {
  MechanismRun run;
  run.record = run_experiment(cfg, options);
  run.normalized = normalized_rewards(run.record, population_beliefs(run.record.config, 0.0));
  return run;
}

inline void write_rounds_csv(std::ostream& out, const std::vector<const MechanismRun*>& runs) {
  out << kRoundsCsvHeader << '\n';
  for (const auto* run : runs) {
    const auto mech = mechanism_name(run->record.config.mechanism);
    for (std::size_t r = 0; r < run->record.rounds.size(); ++r) {
      const auto& l = run->record.rounds[r];
      for (std::size_t t = 0; t < kStrategyTagCount; ++t) {
        if (!l.by_strategy[t].count) continue;
        out << l.round << ',' << tag_name(static_cast<StrategyTag>(t)) << ',' << mech << ','
            << format_number(l.by_strategy[t].mean_reward) << ','
            << format_number(run->normalized.by_strategy[t][r]) << ','
            << format_number(l.budget) << '\n';
      }
    }
  }
}

/// Output of one `simulate` invocation: the configured run and, for REFORM,
/// the plain RPTSC companion on the same seed at the baseline alpha.
struct SimulateResult {
  MechanismRun primary;
  std::optional<MechanismRun> baseline;
};

inline SimConfig baseline_config(const SimConfig& cfg) {
  SimConfig b = cfg;
  b.mechanism = Mechanism::kRptsc;
  b.alpha = cfg.baseline_alpha;
  return b;
}

inline SimulateResult simulate(const SimConfig& raw, RunOptions options = {}) {
  const SimConfig cfg = validate_config(raw);
  SimulateResult out;
  out.primary = make_run(cfg, options);
  if (cfg.mechanism == Mechanism::kReformRptsc) out.baseline = make_run(baseline_config(cfg), options);
  return out;
}

inline constexpr std::size_t kTailRounds = 50;

inline nlohmann::ordered_json gamma_json(const GammaEstimate& g) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return "inf";
  };
  return {{"gamma", num(g.gamma)},
          {"ci95", {num(g.ci_low), num(g.ci_high)}},
          {"mean_gap", g.inverse},
          {"gamma_prior_weighted", num(g.gamma_prior_weighted)},
          {"gamma_uniform_weighted", num(g.gamma_uniform_weighted)}};
}

inline nlohmann::ordered_json run_json(const MechanismRun& run) {
  nlohmann::ordered_json out;
  out["mechanism"] = mechanism_name(run.record.config.mechanism);
  out["alpha"] = run.record.config.alpha;
  out["optimal_reward"] = run.normalized.reference_optimal;
  nlohmann::ordered_json tail = nlohmann::ordered_json::object();
  for (std::size_t t = 0; t < kStrategyTagCount; ++t) {
    const double v = tail_mean(run.normalized.by_strategy[t], kTailRounds);
    if (!std::isnan(v)) tail[std::string(tag_name(static_cast<StrategyTag>(t)))] = v;
  }
  out["normalized_reward_last50"] = tail;
  out["per_agent_budget"] = per_agent_budget(run.record);
  bool has_ta = false;
  for (const auto& l : run.record.rounds) has_ta = has_ta || l.aggregate(StrategyTag::kTrustworthy).count;
  if (has_ta) out["gamma"] = gamma_json(empirical_gamma(run.record));
  return out;
}

inline nlohmann::ordered_json summary_json(const SimulateResult& result) {
  nlohmann::ordered_json out;
  out["config"] = config_to_json(result.primary.record.config);
  out["primary"] = run_json(result.primary);
  if (result.baseline) {
    out["baseline"] = run_json(*result.baseline);
    const auto b = budget_comparison(result.primary.record, result.baseline->record);
    out["budget_overhead"] = {{"raw", b.raw_overhead}, {"alpha_normalized", b.normalized_overhead}};
  }
  const auto q = qualitative_fairness_test(result.primary.record);
  out["qualitative_fairness"] = {{"monotone", verdict_name(q.monotone)},
                                 {"spread_detected", q.spread_detected},
                                 {"detail", q.detail}};
  return out;
}

inline nlohmann::ordered_json meta_json(const SimConfig& cfg) {
  nlohmann::ordered_json out;
  out["seed"] = cfg.seed;
  out["config"] = config_to_json(cfg);
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

/// Writes rounds.csv, summary.json and meta.json into `dir`.
inline void write_outputs(const std::filesystem::path& dir, const SimulateResult& result) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  std::vector<const MechanismRun*> runs{&result.primary};
  if (result.baseline) runs.push_back(&*result.baseline);
  write_rounds_csv(csv, runs);
  write_text(dir / "rounds.csv", csv.str());
  write_text(dir / "summary.json", summary_json(result).dump(2) + "\n");
  write_text(dir / "meta.json", meta_json(result.primary.record.config).dump(2) + "\n");
}

inline const std::vector<std::uint32_t>& figure_k_values() {
  static const std::vector<std::uint32_t> ks{2, 4, 8};
  return ks;
}

/// Normalized TA and RA curves for REFORM at each k and the RPTSC baseline,
/// all on the configured seed.
struct FigureData {
  MechanismRun baseline;
  std::vector<std::pair<std::uint32_t, MechanismRun>> reform;
};

inline FigureData figure1(const SimConfig& raw, RunOptions options = {}) {
  SimConfig cfg = validate_config(raw);
  cfg.mechanism = Mechanism::kReformRptsc;
  FigureData out;
  out.baseline = make_run(baseline_config(cfg), options);
  for (auto k : figure_k_values()) {
    SimConfig c = cfg;
    c.k = k;
    out.reform.emplace_back(k, make_run(c, options));
  }
  return out;
}

inline void write_figure_csv(std::ostream& out, const FigureData& fig) {
  out << kFigureCsvHeader << '\n';
  const StrategyTag tags[] = {StrategyTag::kTrustworthy, StrategyTag::kRandom};
  for (const auto& [k, run] : fig.reform) {
    for (std::size_t r = 0; r < run.record.rounds.size(); ++r) {
      for (auto tag : tags) {
        const auto round = run.record.rounds[r].round;
        out << round << ',' << k << ',' << tag_name(tag) << ",N-REFORM,"
            << format_number(run.normalized.of(tag)[r]) << '\n';
        out << round << ',' << k << ',' << tag_name(tag) << ",N-RPTSC,"
            << format_number(fig.baseline.normalized.of(tag)[r]) << '\n';
      }
    }
  }
}

}  // namespace reform
