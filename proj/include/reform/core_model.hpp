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

// Domain vocabulary shared by the whole library: answers, tasks, agent
// strategies, reports and the experiment configuration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "reform/decay.hpp"
#include "reform/rng.hpp"

namespace reform {

using AgentId = std::uint32_t;
using TaskId = std::uint32_t;
using AnswerId = std::uint32_t;
using RoundIndex = std::uint32_t;

/// Raised for any configuration or model invariant violation. The message
/// names the violated invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AnswerSpace {
 public:
  AnswerSpace() = default;
  explicit AnswerSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw ConfigError("answer space must be non-empty");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      for (std::size_t j = i + 1; j < labels_.size(); ++j)
        if (labels_[i] == labels_[j])
          throw ConfigError("duplicate answer label '" + labels_[i] + "'");
  }

  std::size_t size() const noexcept { return labels_.size(); }
  bool contains(AnswerId id) const noexcept { return id < labels_.size(); }
  const std::string& label(AnswerId id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  AnswerId index_of(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw ConfigError("unknown answer label '" + std::string(label) + "'");
    return static_cast<AnswerId>(it - labels_.begin());
  }

 private:
  std::vector<std::string> labels_;
};

struct Task {
  TaskId id = 0;
  AnswerId true_answer = 0;
  double deadline = 1.0;
};

/// Report or solve time drawn uniformly from (lo, hi] as fractions of the
/// task deadline.
struct TimeWindow {
  double lo = 0.5;
  double hi = 1.0;

  template <class Rng>
  double sample(Rng& rng, double deadline) const {
    return deadline * (hi - (hi - lo) * uniform01(rng));
  }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// High effort, reports its evaluation. Wrong evaluations are uniform over
/// the remaining answers.
struct Trustworthy {
  double accuracy = 0.9;
  TimeWindow solve_time{};
};

/// Low effort, reports a draw from its prior.
struct RandomReporter {
  std::vector<double> prior;
  TimeWindow report_time{};
};

/// Always reports the same answer (collusion when the whole population does).
struct SingleReport {
  AnswerId fixed_answer = 0;
  TimeWindow report_time{};
};

/// High effort, then reports (evaluation + shift) mod |answers|; shift ≥ 1
/// makes every report differ from the agent's own evaluation.
struct Misreport {
  double accuracy = 0.9;
  AnswerId shift = 1;
  TimeWindow solve_time{};
};

using Strategy = std::variant<Trustworthy, RandomReporter, SingleReport, Misreport>;

enum class StrategyTag : std::uint8_t { kTrustworthy = 0, kRandom, kSingleReport, kMisreport };
inline constexpr std::size_t kStrategyTagCount = 4;

inline StrategyTag tag_of(const Strategy& s) noexcept {
  return static_cast<StrategyTag>(s.index());
}

inline std::string_view tag_name(StrategyTag tag) noexcept {
  switch (tag) {
    case StrategyTag::kTrustworthy: return "TA";
    case StrategyTag::kRandom: return "RA";
    case StrategyTag::kSingleReport: return "SR";
    case StrategyTag::kMisreport: return "MR";
  }
  return "?";
}

inline bool exerts_high_effort(const Strategy& s) noexcept {
  return std::holds_alternative<Trustworthy>(s) || std::holds_alternative<Misreport>(s);
}

struct AgentState {
  AgentId id = 0;
  Strategy strategy = Trustworthy{};
  std::vector<double> history;  // normalized round-scores, most recent last
  double cumulative_score = 0.0;
  double term_score = 0.36787944117144233;  // G(0) with the default Gompertz parameters
  std::optional<RoundIndex> last_update;
};

struct Report {
  AgentId agent = 0;
  TaskId task = 0;
  RoundIndex round = 0;
  AnswerId answer = 0;
  double time = 1.0;
  friend bool operator==(const Report&, const Report&) = default;
};

struct RewardOutcome {
  double reward = 0.0;
  std::uint32_t pairings_used = 1;
  bool matched = false;
  bool penalized = false;
  friend bool operator==(const RewardOutcome&, const RewardOutcome&) = default;
};

struct GompertzParams {
  double a = 1.0;
  double b = -1.0;
  double c = -0.5;
  friend bool operator==(const GompertzParams&, const GompertzParams&) = default;
};

enum class Mechanism : std::uint8_t { kReformRptsc, kRptsc, kOutputAgreement, kPts };

inline std::string_view mechanism_name(Mechanism m) noexcept {
  switch (m) {
    case Mechanism::kReformRptsc: return "reform-rptsc";
    case Mechanism::kRptsc: return "rptsc";
    case Mechanism::kOutputAgreement: return "output-agreement";
    case Mechanism::kPts: return "pts";
  }
  return "?";
}

inline Mechanism parse_mechanism(std::string_view name) {
  for (auto m : {Mechanism::kReformRptsc, Mechanism::kRptsc, Mechanism::kOutputAgreement,
                 Mechanism::kPts})
    if (mechanism_name(m) == name) return m;
  throw ConfigError("unknown mechanism '" + std::string(name) + "'");
}

/// Population fractions; validate_config rescales them to sum to one.
struct StrategyMix {
  double trustworthy = 0.6;
  double random = 0.4;
  double single_report = 0.0;
  friend bool operator==(const StrategyMix&, const StrategyMix&) = default;
};

struct SimConfig {
  std::uint32_t rounds = 200;
  std::uint32_t tasks = 50;
  std::uint32_t agents = 750;
  std::uint32_t agents_per_task = 2;  // minimum reports per task
  std::vector<std::string> answers{"0", "1", "2"};
  std::vector<double> truth_prior;  // empty: uniform
  double deadline = 1.0;

  Mechanism mechanism = Mechanism::kReformRptsc;
  std::uint32_t k = 2;
  double alpha = 11.0;
  double baseline_alpha = 10.0;  // alpha of the plain-RPTSC comparison run
  DecayFactor decay = ConstantDecay{};
  std::uint32_t sample_size = 0;  // 0: equal to `tasks`

  double lambda = 0.9;
  GompertzParams gompertz{};

  StrategyMix mix{};
  double ta_accuracy = 0.9;
  TimeWindow ta_time{0.5, 1.0};
  std::vector<double> ra_prior;  // empty: uniform
  TimeWindow ra_time{0.5, 1.0};
  AnswerId single_report_answer = 0;
  TimeWindow sr_time{0.5, 1.0};

  double cost_high = 1.0;
  double cost_low = 0.0;

  std::uint64_t seed = 1;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// The experiment setup of the fairness study: 200 rounds, 50 tasks, 750
/// agents (60% trustworthy at accuracy 0.9, 40% uniform random), three
/// answers, REFORM over RPTSC with alpha 11 and k = 2, decay neglected.
inline SimConfig reference_config() { return SimConfig{}; }

namespace detail {

inline void check_distribution(const std::vector<double>& p, std::size_t size,
                               const std::string& name) {
  if (p.empty()) return;
  if (p.size() != size) throw ConfigError(name + " must have one entry per answer");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(name + " entries must be ≥ 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(name + " must sum to 1");
}

inline void check_window(const TimeWindow& w, const std::string& name) {
  if (!(w.lo >= 0.0 && w.hi > 0.0 && w.lo <= w.hi && w.hi <= 1.0))
    throw ConfigError(name + " must satisfy 0 ≤ lo ≤ hi ≤ 1, hi > 0");
}

}  // namespace detail

/// Checks every configuration invariant and returns the resolved config:
/// the strategy mix is rescaled to sum to one and a zero sample size is
/// replaced by the task count. Throws ConfigError naming the first failure.
inline SimConfig validate_config(SimConfig cfg) {
  if (cfg.rounds < 1) throw ConfigError("rounds ≥ 1 required");
  if (cfg.tasks < 2) throw ConfigError("tasks ≥ 2 required");
  if (cfg.agents_per_task < 2) throw ConfigError("agents_per_task ≥ 2 required");
  if (static_cast<std::uint64_t>(cfg.tasks) * cfg.agents_per_task > cfg.agents)
    throw ConfigError("agents ≥ tasks·agents_per_task required");
  const AnswerSpace space(cfg.answers);
  detail::check_distribution(cfg.truth_prior, space.size(), "truth_prior");
  if (!(cfg.deadline > 0.0) || !std::isfinite(cfg.deadline))
    throw ConfigError("deadline > 0 required");

  if (cfg.k < 1) throw ConfigError("k ≥ 1 required");
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) throw ConfigError("α > 0 required");
  if (!(cfg.baseline_alpha > 0.0) || !std::isfinite(cfg.baseline_alpha))
    throw ConfigError("baseline α > 0 required");
  try {
    validate_decay(cfg.decay, cfg.deadline);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cfg.sample_size == 0) cfg.sample_size = cfg.tasks;
  if (cfg.sample_size < 2 || cfg.sample_size > cfg.tasks)
    throw ConfigError("2 ≤ sample_size ≤ tasks required");

  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0)) throw ConfigError("λ ∈ (0,1)");
  if (!(cfg.gompertz.a > 0.0 && cfg.gompertz.a <= 1.0))
    throw ConfigError("gompertz a ∈ (0,1] required");
  if (!(cfg.gompertz.b < 0.0)) throw ConfigError("gompertz b < 0 required");
  if (!(cfg.gompertz.c < 0.0)) throw ConfigError("gompertz c < 0 required");

  auto& mix = cfg.mix;
  for (double f : {mix.trustworthy, mix.random, mix.single_report})
    if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigError("strategy fractions must be ≥ 0");
  const double total = mix.trustworthy + mix.random + mix.single_report;
  if (!(total > 0.0)) throw ConfigError("strategy fractions must not all be zero");
  mix.trustworthy /= total;
  mix.random /= total;
  mix.single_report /= total;

  if (!(cfg.ta_accuracy >= 0.0 && cfg.ta_accuracy <= 1.0))
    throw ConfigError("accuracy ∈ [0,1] required");
  detail::check_window(cfg.ta_time, "ta_time");
  detail::check_window(cfg.ra_time, "ra_time");
  detail::check_window(cfg.sr_time, "sr_time");
  detail::check_distribution(cfg.ra_prior, space.size(), "ra_prior");
  if (!space.contains(cfg.single_report_answer))
    throw ConfigError("single_report_answer must be a valid answer");
  if (!(cfg.cost_high >= cfg.cost_low)) throw ConfigError("c(e_H) ≥ c(e_L) required");
  return cfg;
}

/// Uniform distribution when `p` is empty.
inline std::vector<double> resolve_distribution(const std::vector<double>& p, std::size_t size) {
  if (!p.empty()) return p;
  return std::vector<double>(size, 1.0 / static_cast<double>(size));
}

}  // namespace reform
