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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "reform/metrics.hpp"

namespace {

using reform::ExperimentRecord;
using reform::RoundLedger;
using reform::StrategyTag;

// One round of `m` trustworthy reports with the given answers, reputations
// and rewards; every report's optimal reward is `optimal`.
RoundLedger synthetic_round(reform::RoundIndex round, const std::vector<reform::AnswerId>& answers,
                            const std::vector<double>& omegas, const std::vector<double>& rewards,
                            double optimal) {
  RoundLedger l;
  l.round = round;
  const std::size_t m = answers.size();
  for (std::size_t i = 0; i < m; ++i) {
    l.reports.push_back({static_cast<reform::AgentId>(i), 0, round, answers[i], 1.0});
    l.tags.push_back(StrategyTag::kTrustworthy);
    reform::RewardOutcome o;
    o.reward = rewards[i];
    l.outcomes.push_back(o);
    l.optimal_reward.push_back(optimal);
    l.omega_before.push_back(omegas[i]);
    l.omega_after.push_back(omegas[i]);
    l.budget += rewards[i];
  }
  l.round_scores.raw.assign(m, 0.0);
  auto& agg = l.by_strategy[0];
  agg.count = static_cast<std::uint32_t>(m);
  agg.total_reward = l.budget;
  agg.mean_reward = l.budget / static_cast<double>(m);
  return l;
}

ExperimentRecord record_of(std::vector<RoundLedger> rounds) {
  ExperimentRecord rec;
  rec.config = reform::validate_config(reform::reference_config());
  rec.rounds = std::move(rounds);
  return rec;
}

TEST(NormalizedRewards, PerfectMatchRecordIsOne) {
  const auto beliefs = reform::symmetric_beliefs(3, 0.9, 0.5, 50, 11.0, 1.0);
  const double m = reform::reference_optimal_reward(beliefs);
  std::vector<RoundLedger> rounds;
  for (reform::RoundIndex r = 1; r <= 5; ++r)
    rounds.push_back(synthetic_round(r, {0, 1, 2}, {0.4, 0.4, 0.4}, {m, m, m}, m));
  const auto n = reform::normalized_rewards(record_of(rounds), beliefs);
  ASSERT_EQ(n.of(StrategyTag::kTrustworthy).size(), 5u);
  for (double v : n.of(StrategyTag::kTrustworthy)) EXPECT_DOUBLE_EQ(v, 1.0);
  for (double v : n.of(StrategyTag::kRandom)) EXPECT_TRUE(std::isnan(v));
}

TEST(NormalizedRewards, ZeroOptimalIsAnError) {
  auto beliefs = reform::symmetric_beliefs(1, 1.0, 0.5, 50, 11.0, 1.0);
  EXPECT_THROW(reform::normalized_rewards(record_of({}), beliefs), std::domain_error);
}

TEST(WindowMean, SkipsMissingValues) {
  const std::vector<double> v{1.0, std::nan(""), 3.0, 5.0};
  EXPECT_DOUBLE_EQ(reform::window_mean(v, 0, 3), 2.0);
  EXPECT_DOUBLE_EQ(reform::tail_mean(v, 2), 4.0);
  EXPECT_TRUE(std::isnan(reform::window_mean(v, 1, 2)));
}

TEST(EmpiricalGamma, AlwaysOptimalGivesInfinity) {
  std::vector<RoundLedger> rounds;
  for (reform::RoundIndex r = 1; r <= 4; ++r)
    rounds.push_back(synthetic_round(r, {0, 1}, {0.5, 0.5}, {3.0, 3.0}, 3.0));
  const auto g = reform::empirical_gamma(record_of(rounds));
  EXPECT_TRUE(g.infinite);
  EXPECT_TRUE(std::isinf(g.gamma));
  EXPECT_EQ(g.inverse, 0.0);
}

TEST(EmpiricalGamma, AveragesPerRoundThenAcrossRounds) {
  std::vector<RoundLedger> rounds;
  rounds.push_back(synthetic_round(1, {0, 0}, {0.5, 0.5}, {1.0, 3.0}, 4.0));  // mean gap 2
  rounds.push_back(synthetic_round(2, {1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5}, {0, 0, 0, 0}, 6.0));  // 6
  const auto g = reform::empirical_gamma(record_of(rounds), 0, 200);
  EXPECT_DOUBLE_EQ(g.inverse, 4.0);
  EXPECT_DOUBLE_EQ(g.gamma, 0.25);
  EXPECT_DOUBLE_EQ(g.gamma_prior_weighted, 1.0 / (28.0 / 6.0));
  EXPECT_DOUBLE_EQ(g.gamma_uniform_weighted, 1.0 / 4.0);
  EXPECT_LE(g.ci_low, g.ci_high);
  EXPECT_GE(g.ci_low, 1.0 / 6.0 - 1e-12);
  EXPECT_LE(g.ci_high, 0.5 + 1e-12);
}

RoundLedger two_bin_round(reform::RoundIndex round, double low_reward, double high_reward,
                          std::size_t per_bin) {
  std::vector<reform::AnswerId> answers;
  std::vector<double> omegas, rewards;
  for (reform::AnswerId x = 0; x < 3; ++x)
    for (std::size_t i = 0; i < 2 * per_bin; ++i) {
      const bool high = i % 2 == 1;
      answers.push_back(x);
      omegas.push_back(high ? 0.8 + 1e-4 * i : 0.2 + 1e-4 * i);
      rewards.push_back((high ? high_reward : low_reward) + ((i / 2) % 2 ? 1.0 : -1.0));
    }
  return synthetic_round(round, answers, omegas, rewards, 20.0);
}

TEST(QualitativeFairness, PlantedIncreaseIsMonotone) {
  std::vector<RoundLedger> rounds;
  for (reform::RoundIndex r = 1; r <= 4; ++r) rounds.push_back(two_bin_round(r, 5.0, 8.0, 10));
  const auto q = reform::qualitative_fairness_test(record_of(rounds), 2, 0);
  EXPECT_EQ(q.monotone, reform::Verdict::kPass);
  EXPECT_TRUE(q.spread_detected);
  ASSERT_EQ(q.cells.size(), 6u);
  EXPECT_EQ(q.cells[0].count, 40u);
  EXPECT_DOUBLE_EQ(q.cells[1].mean, 8.0);
}

TEST(QualitativeFairness, PlantedDecreaseFails) {
  std::vector<RoundLedger> rounds;
  for (reform::RoundIndex r = 1; r <= 4; ++r) rounds.push_back(two_bin_round(r, 8.0, 5.0, 10));
  EXPECT_EQ(reform::qualitative_fairness_test(record_of(rounds), 2, 0).monotone,
            reform::Verdict::kFail);
}

TEST(QualitativeFairness, EqualBinsShowNoSpread) {
  std::vector<RoundLedger> rounds;
  for (reform::RoundIndex r = 1; r <= 4; ++r) rounds.push_back(two_bin_round(r, 6.0, 6.0, 10));
  const auto q = reform::qualitative_fairness_test(record_of(rounds), 2, 0);
  EXPECT_EQ(q.monotone, reform::Verdict::kPass);
  EXPECT_FALSE(q.spread_detected);
}

TEST(QualitativeFairness, SparseCellsAreInconclusive) {
  const auto q = reform::qualitative_fairness_test(record_of({two_bin_round(1, 5.0, 8.0, 10)}), 2, 0);
  EXPECT_EQ(q.monotone, reform::Verdict::kInconclusive);
  EXPECT_EQ(reform::verdict_name(q.monotone), "inconclusive");
}

TEST(BudgetComparison, RawAndNormalized) {
  auto a = record_of({synthetic_round(1, {0, 0}, {0.5, 0.5}, {12.0, 10.0}, 20.0)});
  auto b = record_of({synthetic_round(1, {0, 0}, {0.5, 0.5}, {10.0, 10.0}, 20.0)});
  a.config.alpha = 11.0;
  b.config.alpha = 10.0;
  const auto cmp = reform::budget_comparison(a, b);
  EXPECT_DOUBLE_EQ(cmp.raw_overhead, 0.1);
  EXPECT_NEAR(cmp.normalized_overhead, 0.0, 1e-12);
}

TEST(MeanInterval, StudentT) {
  const auto iv = reform::mean_interval({1.0, 2.0, 3.0, 4.0, 5.0});
  EXPECT_DOUBLE_EQ(iv.mean, 3.0);
  EXPECT_NEAR(iv.ci_high - iv.mean, 2.776445105 * std::sqrt(2.5 / 5.0), 1e-8);
  EXPECT_TRUE(iv.excludes_zero());
  EXPECT_TRUE(iv.covers(3.5));
  const auto zero = reform::mean_interval({0.0, 0.0});
  EXPECT_FALSE(zero.excludes_zero());
}

TEST(MetricsIdempotence, RecomputationGivesIdenticalValues) {
  reform::SimConfig c;
  c.rounds = 12;
  c.tasks = 8;
  c.agents = 48;
  const auto rec = reform::run_experiment(c);
  const auto g1 = reform::empirical_gamma(rec), g2 = reform::empirical_gamma(rec);
  EXPECT_EQ(g1.gamma, g2.gamma);
  EXPECT_EQ(g1.ci_low, g2.ci_low);
  const auto b = reform::population_beliefs(rec.config, 0.0);
  EXPECT_EQ(reform::normalized_rewards(rec, b).of(StrategyTag::kTrustworthy),
            reform::normalized_rewards(rec, b).of(StrategyTag::kTrustworthy));
}

}  // namespace
