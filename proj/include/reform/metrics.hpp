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

// Fairness and incentive measurements over experiment records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "reform/analytics.hpp"
#include "reform/core_model.hpp"
#include "reform/rng.hpp"
#include "reform/simulator.hpp"

namespace reform {

inline constexpr double kSignificance = 0.05;

/// Prior-weighted optimal reward at the beliefs' parameters.
inline double reference_optimal_reward(const BeliefModel& b) {
  double m = 0.0;
  for (std::size_t x = 0; x < b.answers(); ++x) m += b.p(x) * optimal_reward(b.p(x), b.n, b.alpha);
  return m * b.beta;
}

/// Per-round mean reward of each strategy divided by the optimal reward.
struct NormalizedSeries {
  double reference_optimal = 0.0;
  std::vector<RoundIndex> rounds;
  std::array<std::vector<double>, kStrategyTagCount> by_strategy;  // NaN where absent

  const std::vector<double>& of(StrategyTag tag) const {
    return by_strategy[static_cast<std::size_t>(tag)];
  }
};

inline NormalizedSeries normalized_rewards(const ExperimentRecord& record, const BeliefModel& b) {
  NormalizedSeries out;
  out.reference_optimal = reference_optimal_reward(b);
  if (!(out.reference_optimal != 0.0) || !std::isfinite(out.reference_optimal))
    throw std::domain_error("normalized_rewards: optimal reward is zero");
  for (const auto& ledger : record.rounds) {
    out.rounds.push_back(ledger.round);
    for (std::size_t t = 0; t < kStrategyTagCount; ++t) {
      const auto& agg = ledger.by_strategy[t];
      out.by_strategy[t].push_back(agg.count ? agg.mean_reward / out.reference_optimal
                                             : std::nan(""));
    }
  }
  return out;
}

/// Mean of values[first, last) ignoring NaN.
inline double window_mean(const std::vector<double>& values, std::size_t first,
                          std::size_t last) {
  last = std::min(last, values.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = first; i < last; ++i)
    if (!std::isnan(values[i])) {
      sum += values[i];
      ++n;
    }
  return n ? sum / static_cast<double>(n) : std::nan("");
}

inline double tail_mean(const std::vector<double>& values, std::size_t count) {
  return window_mean(values, values.size() > count ? values.size() - count : 0, values.size());
}

struct GammaEstimate {
  double inverse = 0.0;  // mean over rounds of the per-round mean TA gap
  double gamma = std::numeric_limits<double>::infinity();
  double ci_low = 0.0;   // 95% round-bootstrap interval for gamma
  double ci_high = 0.0;
  double gamma_prior_weighted = 0.0;    // per-answer gaps weighted by answer frequency
  double gamma_uniform_weighted = 0.0;  // per-answer gaps averaged uniformly
  bool infinite = false;
};

namespace detail {
inline double invert(double inverse) {
  return inverse > 0.0 ? 1.0 / inverse : std::numeric_limits<double>::infinity();
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}
}  // namespace detail

/// gamma = 1 / mean(M' - realized reward) over trustworthy reports, with
/// the gap averaged within each round and then across rounds. Rounds before
/// `burn_in` are skipped. A zero gap yields the +infinity sentinel.
inline GammaEstimate empirical_gamma(const ExperimentRecord& record, std::size_t burn_in = 0,
                                     std::size_t resamples = 1000, std::uint64_t seed = 2024) {
  std::vector<double> per_round;
  const std::size_t K = record.config.answers.size();
  std::vector<double> gap_by_answer(K, 0.0);
  std::vector<std::size_t> count_by_answer(K, 0);
  for (std::size_t r = burn_in; r < record.rounds.size(); ++r) {
    const auto& l = record.rounds[r];
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < l.reports.size(); ++i) {
      if (l.tags[i] != StrategyTag::kTrustworthy) continue;
      const double gap = l.optimal_reward[i] - l.outcomes[i].reward;
      sum += gap;
      ++n;
      gap_by_answer[l.reports[i].answer] += gap;
      count_by_answer[l.reports[i].answer] += 1;
    }
    if (n) per_round.push_back(sum / static_cast<double>(n));
  }
  if (per_round.empty()) throw std::invalid_argument("empirical_gamma: no trustworthy reports");

  GammaEstimate est;
  est.inverse = std::accumulate(per_round.begin(), per_round.end(), 0.0) /
                static_cast<double>(per_round.size());
  est.gamma = detail::invert(est.inverse);
  est.infinite = std::isinf(est.gamma);

  std::size_t total = 0;
  double pooled = 0.0, uniform = 0.0;
  std::size_t present = 0;
  for (std::size_t x = 0; x < K; ++x) {
    total += count_by_answer[x];
    pooled += gap_by_answer[x];
    if (count_by_answer[x]) {
      uniform += gap_by_answer[x] / static_cast<double>(count_by_answer[x]);
      ++present;
    }
  }
  est.gamma_prior_weighted = detail::invert(pooled / static_cast<double>(total));
  est.gamma_uniform_weighted = detail::invert(uniform / static_cast<double>(present));

  Xoshiro256 rng(seed);
  std::vector<double> boot;
  boot.reserve(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t j = 0; j < per_round.size(); ++j)
      s += per_round[uniform_index(rng, per_round.size())];
    boot.push_back(detail::invert(s / static_cast<double>(per_round.size())));
  }
  est.ci_low = detail::percentile(boot, kSignificance / 2);
  est.ci_high = detail::percentile(boot, 1.0 - kSignificance / 2);
  return est;
}

enum class Verdict { kPass, kFail, kInconclusive };

inline std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

struct FairnessCell {
  AnswerId answer = 0;
  std::size_t bin = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct QualitativeFairness {
  Verdict monotone = Verdict::kInconclusive;
  /// Top and bottom reputation bins differ significantly for some answer
  /// (two-sided, Bonferroni over answers).
  bool spread_detected = false;
  std::vector<double> bin_edges;  // upper edges of all but the last bin
  std::vector<FairnessCell> cells;
  std::string detail;
};

/// Groups trustworthy reports by (answer, quantile bin of the reputation the
/// agent entered the round with) and checks that mean reward does not drop
/// significantly from one bin to the next (one-sided z-test at 5%). Any
/// cell with fewer than `min_samples` reports makes the verdict
/// inconclusive.
inline QualitativeFairness qualitative_fairness_test(const ExperimentRecord& record,
                                                     std::size_t bins = 4,
                                                     std::size_t burn_in = 10,
                                                     std::size_t min_samples = 30) {
  QualitativeFairness out;
  if (bins < 2) {
    out.detail = "need at least two bins";
    return out;
  }
  const std::size_t K = record.config.answers.size();
  struct Sample {
    double omega;
    AnswerId answer;
    double reward;
  };
  std::vector<Sample> samples;
  for (std::size_t r = burn_in; r < record.rounds.size(); ++r) {
    const auto& l = record.rounds[r];
    for (std::size_t i = 0; i < l.reports.size(); ++i)
      if (l.tags[i] == StrategyTag::kTrustworthy)
        samples.push_back({l.omega_before[i], l.reports[i].answer, l.outcomes[i].reward});
  }
  if (samples.empty()) {
    out.detail = "no trustworthy reports";
    return out;
  }
  std::vector<double> omegas;
  omegas.reserve(samples.size());
  for (const auto& s : samples) omegas.push_back(s.omega);
  std::sort(omegas.begin(), omegas.end());
  for (std::size_t b = 1; b < bins; ++b)
    out.bin_edges.push_back(omegas[b * omegas.size() / bins]);

  std::vector<double> sum(K * bins, 0.0), sq(K * bins, 0.0);
  std::vector<std::size_t> cnt(K * bins, 0);
  for (const auto& s : samples) {
    const auto bin = static_cast<std::size_t>(
        std::upper_bound(out.bin_edges.begin(), out.bin_edges.end(), s.omega) -
        out.bin_edges.begin());
    const std::size_t c = s.answer * bins + bin;
    sum[c] += s.reward;
    sq[c] += s.reward * s.reward;
    cnt[c] += 1;
  }
  bool enough = true;
  for (AnswerId x = 0; x < K; ++x)
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t c = x * bins + b;
      FairnessCell cell{x, b, cnt[c], 0.0, 0.0};
      if (cnt[c] > 0) {
        cell.mean = sum[c] / static_cast<double>(cnt[c]);
        if (cnt[c] > 1) {
          const double var = (sq[c] - cnt[c] * cell.mean * cell.mean) / static_cast<double>(cnt[c] - 1);
          cell.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(cnt[c]));
        }
      }
      if (cnt[c] < min_samples) enough = false;
      out.cells.push_back(cell);
    }
  if (!enough) {
    out.detail = "fewer than " + std::to_string(min_samples) + " samples in some cell";
    return out;
  }

  const boost::math::normal std_normal;
  const double one_sided = boost::math::quantile(std_normal, 1.0 - kSignificance);
  const double two_sided =
      boost::math::quantile(std_normal, 1.0 - kSignificance / (2.0 * static_cast<double>(K)));
  out.monotone = Verdict::kPass;
  for (AnswerId x = 0; x < K; ++x) {
    for (std::size_t b = 0; b + 1 < bins; ++b) {
      const auto& lo = out.cells[x * bins + b];
      const auto& hi = out.cells[x * bins + b + 1];
      const double se = std::hypot(lo.std_error, hi.std_error);
      if (se > 0.0 && (lo.mean - hi.mean) / se > one_sided) {
        out.monotone = Verdict::kFail;
        out.detail += "answer " + std::to_string(x) + ": bin " + std::to_string(b) +
                      " significantly above bin " + std::to_string(b + 1) + "; ";
      }
    }
    const auto& bottom = out.cells[x * bins];
    const auto& top = out.cells[x * bins + bins - 1];
    const double se = std::hypot(bottom.std_error, top.std_error);
    if (se > 0.0 && std::abs(top.mean - bottom.mean) / se > two_sided) out.spread_detected = true;
  }
  return out;
}

struct BudgetComparison {
  double reform_per_agent = 0.0;
  double rptsc_per_agent = 0.0;
  double raw_overhead = 0.0;         // relative, rewards as paid
  double normalized_overhead = 0.0;  // relative, each budget divided by its alpha
};

inline double per_agent_budget(const ExperimentRecord& record) {
  double sum = 0.0;
  for (const auto& l : record.rounds) sum += l.budget / static_cast<double>(l.reports.size());
  return sum / static_cast<double>(record.rounds.size());
}

inline BudgetComparison budget_comparison(const ExperimentRecord& reform_run,
                                          const ExperimentRecord& rptsc_run) {
  BudgetComparison out;
  out.reform_per_agent = per_agent_budget(reform_run);
  out.rptsc_per_agent = per_agent_budget(rptsc_run);
  out.raw_overhead = (out.reform_per_agent - out.rptsc_per_agent) / out.rptsc_per_agent;
  const double a = out.reform_per_agent / reform_run.config.alpha;
  const double b = out.rptsc_per_agent / rptsc_run.config.alpha;
  out.normalized_overhead = (a - b) / b;
  return out;
}

struct IntervalEstimate {
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t samples = 0;

  bool excludes_zero() const { return ci_high < 0.0 || ci_low > 0.0; }
  bool covers(double v) const { return ci_low <= v && v <= ci_high; }
};

/// Student-t 95% interval of the mean.
inline IntervalEstimate mean_interval(const std::vector<double>& values) {
  IntervalEstimate out;
  out.samples = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() < 2) {
    out.ci_low = out.ci_high = out.mean;
    return out;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double se = std::sqrt(ss / static_cast<double>(values.size() - 1) /
                              static_cast<double>(values.size()));
  const boost::math::students_t dist(static_cast<double>(values.size() - 1));
  const double t = boost::math::quantile(dist, 1.0 - kSignificance / 2);
  out.ci_low = out.mean - t * se;
  out.ci_high = out.mean + t * se;
  return out;
}

struct ProbeOptions {
  std::size_t replicates = 30;
  std::uint32_t rounds = 0;  // 0: the configured round count
};

struct DeviationResult {
  IntervalEstimate gap;  // deviant utility minus trustworthy utility
  double deviant_utility = 0.0;
  double trustworthy_utility = 0.0;
};

inline double effort_cost(const Strategy& s, const SimConfig& cfg) {
  return exerts_high_effort(s) ? cfg.cost_high : cfg.cost_low;
}

/// Paired experiments in an otherwise trustworthy population: one
/// designated agent plays `deviant` in one arm and stays trustworthy in the
/// other. Both arms share every random stream, so the gap isolates the
/// strategy change. Utility is mean reward minus effort cost per round.
template <class Rng>
DeviationResult deviation_probe(const SimConfig& cfg, const Strategy& deviant, Rng& rng,
                                ProbeOptions options = {}, RunOptions run = {}) {
  SimConfig base = cfg;
  base.mix = {1.0, 0.0, 0.0};
  if (options.rounds) base.rounds = options.rounds;
  base = validate_config(base);

  std::vector<double> gaps;
  double dev_total = 0.0, ta_total = 0.0;
  for (std::size_t rep = 0; rep < options.replicates; ++rep) {
    base.seed = rng();
    const auto designated = static_cast<AgentId>(uniform_index(rng, base.agents));
    auto population = build_population(base);
    auto deviant_population = population;
    deviant_population[designated].strategy = deviant;

    auto utility = [&](std::vector<AgentState> agents) {
      const double cost = effort_cost(agents[designated].strategy, base);
      Simulation sim(base, std::move(agents), run);
      double sum = 0.0;
      for (std::uint32_t r = 0; r < base.rounds; ++r) sum += sim.step().outcomes[designated].reward - cost;
      return sum / static_cast<double>(base.rounds);
    };
    const double u_ta = utility(std::move(population));
    const double u_dev = utility(std::move(deviant_population));
    gaps.push_back(u_dev - u_ta);
    dev_total += u_dev;
    ta_total += u_ta;
  }
  DeviationResult out;
  out.gap = mean_interval(gaps);
  out.deviant_utility = dev_total / static_cast<double>(options.replicates);
  out.trustworthy_utility = ta_total / static_cast<double>(options.replicates);
  return out;
}

struct CollusionResult {
  double reform_mean_reward = 0.0;            // all collude, REFORM over RPTSC
  double rptsc_mean_reward = 0.0;             // all collude, plain RPTSC
  double output_agreement_mean_reward = 0.0;  // all collude, output agreement
  double collude_mean_omega = 0.0;            // mean reputation over agents and rounds
  double truthful_mean_omega = 0.0;
  double collude_mean_raw_score = 0.0;        // mean raw round-score
  double truthful_mean_raw_score = 0.0;
  double mixed_colluder_reward = 0.0;         // half the population colludes
  double mixed_trustworthy_reward = 0.0;
};

namespace detail {
struct RunSummary {
  double mean_reward = 0.0;
  double mean_omega = 0.0;
  double mean_raw = 0.0;
  std::array<double, kStrategyTagCount> reward_by_tag{};
};

inline RunSummary summarize(const ExperimentRecord& rec) {
  RunSummary s;
  std::array<double, kStrategyTagCount> tag_sum{};
  std::array<std::size_t, kStrategyTagCount> tag_n{};
  std::size_t n = 0;
  for (const auto& l : rec.rounds)
    for (std::size_t i = 0; i < l.reports.size(); ++i) {
      s.mean_reward += l.outcomes[i].reward;
      s.mean_omega += l.omega_after[i];
      s.mean_raw += l.round_scores.raw[i];
      const auto t = static_cast<std::size_t>(l.tags[i]);
      tag_sum[t] += l.outcomes[i].reward;
      tag_n[t] += 1;
      ++n;
    }
  s.mean_reward /= static_cast<double>(n);
  s.mean_omega /= static_cast<double>(n);
  s.mean_raw /= static_cast<double>(n);
  for (std::size_t t = 0; t < kStrategyTagCount; ++t)
    s.reward_by_tag[t] = tag_n[t] ? tag_sum[t] / static_cast<double>(tag_n[t]) : std::nan("");
  return s;
}
}  // namespace detail

/// Single-report collusion: everyone reports `cfg.single_report_answer`.
/// Compares rewards across mechanisms and reputations against a fully
/// trustworthy run with the same timing.
inline CollusionResult collusion_probe(const SimConfig& cfg, RunOptions run = {}) {
  CollusionResult out;
  SimConfig collude = cfg;
  collude.mix = {0.0, 0.0, 1.0};
  collude.sr_time = cfg.ta_time;

  collude.mechanism = Mechanism::kReformRptsc;
  const auto reform_run = detail::summarize(run_experiment(collude, run));
  out.reform_mean_reward = reform_run.mean_reward;
  out.collude_mean_omega = reform_run.mean_omega;
  out.collude_mean_raw_score = reform_run.mean_raw;

  collude.mechanism = Mechanism::kRptsc;
  out.rptsc_mean_reward = detail::summarize(run_experiment(collude, run)).mean_reward;
  collude.mechanism = Mechanism::kOutputAgreement;
  out.output_agreement_mean_reward = detail::summarize(run_experiment(collude, run)).mean_reward;

  SimConfig truthful = cfg;
  truthful.mix = {1.0, 0.0, 0.0};
  truthful.mechanism = Mechanism::kReformRptsc;
  const auto truthful_run = detail::summarize(run_experiment(truthful, run));
  out.truthful_mean_omega = truthful_run.mean_omega;
  out.truthful_mean_raw_score = truthful_run.mean_raw;

  SimConfig mixed = cfg;
  mixed.mix = {0.5, 0.0, 0.5};
  mixed.sr_time = cfg.ta_time;
  mixed.mechanism = Mechanism::kReformRptsc;
  const auto mixed_run = detail::summarize(run_experiment(mixed, run));
  out.mixed_colluder_reward = mixed_run.reward_by_tag[static_cast<std::size_t>(StrategyTag::kSingleReport)];
  out.mixed_trustworthy_reward = mixed_run.reward_by_tag[static_cast<std::size_t>(StrategyTag::kTrustworthy)];
  return out;
}

}  // namespace reform
