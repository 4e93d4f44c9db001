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

#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "reform/reform.hpp"

namespace {

using reform::PeerView;
using reform::Report;

// Scripted peers: returns the listed views in order.
struct Script {
  std::vector<PeerView> peers;
  std::size_t next = 0;
  PeerView operator()(reform::Xoshiro256&) { return peers.at(next++); }
};

const reform::RptscScheme kScheme{10.0};
const reform::DecayFactor kConstant = reform::ConstantDecay{};
const reform::FrequencySample kSample{{1, 3}, 4};  // total 5
const Report kReport{0, 0, 1, 0, 1.0};

TEST(RunPairing, FirstMatchPays) {
  reform::Xoshiro256 rng(1);
  Script s{{{0, 0.9}}};
  const auto out = reform::run_pairing(kReport, 0.5, s, kScheme, kConstant, kSample, 3, rng);
  EXPECT_TRUE(out.matched);
  EXPECT_EQ(out.pairings_used, 1u);
  EXPECT_DOUBLE_EQ(out.reward, 10.0 * (5.0 / 2.0 - 1.0));
}

TEST(RunPairing, HigherReputationEarnsAnotherChance) {
  reform::Xoshiro256 rng(1);
  Script s{{{1, 0.2}, {0, 0.2}}};
  const auto out = reform::run_pairing(kReport, 0.5, s, kScheme, kConstant, kSample, 2, rng);
  EXPECT_TRUE(out.matched);
  EXPECT_EQ(out.pairings_used, 2u);
  EXPECT_FALSE(out.penalized);
}

TEST(RunPairing, TieGivesNoExtraChance) {
  reform::Xoshiro256 rng(1);
  Script s{{{1, 0.5}, {0, 0.0}}};
  const auto out = reform::run_pairing(kReport, 0.5, s, kScheme, kConstant, kSample, 8, rng);
  EXPECT_FALSE(out.matched);
  EXPECT_TRUE(out.penalized);
  EXPECT_EQ(out.pairings_used, 1u);
  EXPECT_EQ(out.reward, -10.0);
}

TEST(RunPairing, ChancesRunOutAtK) {
  reform::Xoshiro256 rng(1);
  Script s{{{1, 0.0}, {1, 0.0}, {1, 0.0}, {0, 0.0}}};
  const auto out = reform::run_pairing(kReport, 0.9, s, kScheme, kConstant, kSample, 3, rng);
  EXPECT_EQ(out.pairings_used, 3u);
  EXPECT_TRUE(out.penalized);
  EXPECT_EQ(s.next, 3u);
}

TEST(RunPairing, UnseenMismatchFrequencyPaysZero) {
  reform::Xoshiro256 rng(1);
  const reform::FrequencySample none{{0, 4}, 4};
  Script s{{{1, 1.0}}};
  const auto out = reform::run_pairing(kReport, 0.5, s, kScheme, kConstant, none, 1, rng);
  EXPECT_EQ(out.reward, 0.0);
}

TEST(RunPairing, DecayScalesTheFactor) {
  reform::Xoshiro256 rng(1);
  Script s{{{1, 1.0}}};
  const Report late{0, 0, 1, 0, 0.5};
  const auto out = reform::run_pairing(late, 0.5, s, kScheme, reform::LinearDecay{1.0}, kSample, 1, rng);
  EXPECT_DOUBLE_EQ(out.reward, -5.0);
  EXPECT_THROW(reform::run_pairing(late, 0.5, s, kScheme, kConstant, kSample, 0, rng),
               std::invalid_argument);
}

TEST(RunPairing, SingleChanceEqualsPlainSettlement) {
  oracle::for_all(31, 500, [](auto& rng, int) {
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(reform::uniform_index(rng, 30));
    reform::FrequencySample sample;
    sample.counts = {0, 0, 0};
    for (std::uint32_t i = 0; i + 1 < n; ++i) sample.counts[reform::uniform_index(rng, 3)]++;
    sample.drawn = n - 1;
    const Report report{0, 0, 1, static_cast<reform::AnswerId>(reform::uniform_index(rng, 3)),
                        oracle::uniform(rng, 0.1, 1.0)};
    auto draw = [](reform::Xoshiro256& g) {
      return PeerView{static_cast<reform::AnswerId>(reform::uniform_index(g, 3)), reform::uniform01(g)};
    };
    const std::uint64_t seed = rng();
    reform::Xoshiro256 a(seed), b(seed);
    const auto x = reform::run_pairing(report, reform::uniform01(rng), draw, kScheme,
                                       reform::ExponentialDecay{0.7}, sample, 1, a);
    const auto y = reform::settle_plain(report, draw, kScheme, reform::ExponentialDecay{0.7}, sample, b);
    EXPECT_EQ(x.reward, y.reward);
    EXPECT_EQ(x.matched, y.matched);
  });
}

TEST(SelectPeer, ExcludesSelfUniformly) {
  const std::vector<reform::AgentId> members{4, 9, 12, 30};
  reform::Xoshiro256 rng(5);
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 30000; ++i) {
    const auto p = reform::select_peer(std::span<const reform::AgentId>(members), 12u, rng);
    ASSERT_NE(p, 12u);
    hits[std::find(members.begin(), members.end(), p) - members.begin()]++;
  }
  EXPECT_EQ(hits[2], 0);
  for (int i : {0, 1, 3}) EXPECT_NEAR(hits[i], 10000, 400);
  const std::vector<reform::AgentId> lonely{3};
  EXPECT_THROW(reform::select_peer(std::span<const reform::AgentId>(lonely), 3u, rng),
               std::invalid_argument);
}

// A higher reputation never lowers the reward on the same random draws: it
// only turns some penalties into further chances, and any further chance
// pays at least the penalty.
TEST(RunPairingProperties, RewardNonDecreasingInReputation) {
  oracle::for_all(32, 25, [](auto& rng, int) {
    const double q = oracle::uniform(rng, 0.1, 0.9), qp = oracle::uniform(rng, 0.1, 0.95);
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(reform::uniform_index(rng, 6));
    const double low = oracle::uniform(rng, 0.0, 1.0), high = oracle::uniform(rng, low, 1.0);
    const std::uint64_t seed = rng();
    const oracle::BinomialTable table(9, q);
    auto reward = [&](double own, std::uint64_t trial) {
      reform::Xoshiro256 g(reform::derive_seed(seed, trial, 0, reform::StreamPurpose::kProbe));
      reform::FrequencySample s{{0, 0}, 9};
      s.counts[0] = table.draw(g);
      s.counts[1] = 9 - s.counts[0];
      auto draw = [&](reform::Xoshiro256& h) {
        return PeerView{reform::bernoulli(h, qp) ? 0u : 1u, reform::uniform01(h)};
      };
      return reform::run_pairing(kReport, own, draw, kScheme, kConstant, s, k, g).reward;
    };
    for (std::uint64_t t = 0; t < 2000; ++t) ASSERT_LE(reward(low, t), reward(high, t));
  });
}

}  // namespace
