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

// Test-side reference computations. Nothing here calls the closed forms in
// analytics.hpp; the exact oracle enumerates the frequency sample and the
// pairing tree directly.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "reform/reform.hpp"
#include "reform/reward.hpp"
#include "reform/rng.hpp"

namespace oracle {

/// P(b = j) for b ~ Binomial(n, q), j = 0..n.
inline std::vector<double> binomial_pmf(std::uint32_t n, double q) {
  std::vector<double> pmf(n + 1, 0.0);
  for (std::uint32_t j = 0; j <= n; ++j)
    pmf[j] = std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0)) *
             std::pow(q, j) * std::pow(1.0 - q, n - j);
  return pmf;
}

/// Exact expected RPTSC-based REFORM reward of a report x. The other n-1
/// sampled reports equal x independently with probability q, each peer
/// matches with probability q_post and is outranked with probability r.
/// A match pays alpha(n/(b+1) - 1); a final mismatch pays -alpha unless the
/// answer's frequency is zero (b = 0).
inline double expected_reward(double q, double q_post, double r, std::uint32_t n, double alpha,
                              std::uint32_t k) {
  const auto pmf = binomial_pmf(n - 1, q);
  double total = 0.0;
  for (std::uint32_t b = 0; b < n; ++b) {
    const double on_match = alpha * (static_cast<double>(n) / (b + 1.0) - 1.0);
    const double on_mismatch = b == 0 ? 0.0 : -alpha;
    // value of the remaining chances, computed back from the last one
    double v = q_post * on_match + (1.0 - q_post) * on_mismatch;
    for (std::uint32_t left = 2; left <= k; ++left)
      v = q_post * on_match + (1.0 - q_post) * (r * v + (1.0 - r) * on_mismatch);
    total += pmf[b] * v;
  }
  return total;
}

/// Inverse-CDF sampler for a binomial count.
class BinomialTable {
 public:
  BinomialTable(std::uint32_t n, double q) : cdf_(binomial_pmf(n, q)) {
    for (std::size_t i = 1; i < cdf_.size(); ++i) cdf_[i] += cdf_[i - 1];
    cdf_.back() = 1.0;
  }
  template <class Rng>
  std::uint32_t draw(Rng& rng) const {
    const double u = reform::uniform01(rng);
    std::size_t j = 0;
    while (j + 1 < cdf_.size() && u >= cdf_[j]) ++j;
    return static_cast<std::uint32_t>(j);
  }

 private:
  std::vector<double> cdf_;
};

struct MonteCarlo {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Runs the library pairing engine on synthetic draws. Answer 0 is the
/// report; a mismatched peer and every non-matching sampled report carry
/// answer 1. Peers outrank the agent with probability 1 - r (the agent's
/// Omega is 1, a peer's is 2 or 0).
inline MonteCarlo simulate_pairing(double q, double q_post, double r, std::uint32_t n,
                                   double alpha, std::uint32_t k, std::uint64_t trials,
                                   std::uint64_t seed) {
  reform::Xoshiro256 rng(seed);
  const BinomialTable table(n - 1, q);
  const reform::RptscScheme scheme{alpha};
  const reform::DecayFactor decay = reform::ConstantDecay{};
  const reform::Report report{0, 0, 1, 0, 1.0};
  reform::FrequencySample sample;
  sample.counts.assign(2, 0);
  sample.drawn = n - 1;
  double sum = 0.0, sq = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint32_t b = table.draw(rng);
    sample.counts[0] = b;
    sample.counts[1] = n - 1 - b;
    auto draw_peer = [&](reform::Xoshiro256& g) {
      const bool match = reform::bernoulli(g, q_post);
      const bool outranked = reform::bernoulli(g, r);
      return reform::PeerView{match ? 0u : 1u, outranked ? 0.0 : 2.0};
    };
    const auto out = reform::run_pairing(report, 1.0, draw_peer, scheme, decay, sample, k, rng);
    sum += out.reward;
    sq += out.reward * out.reward;
  }
  MonteCarlo mc;
  mc.mean = sum / static_cast<double>(trials);
  const double var = sq / static_cast<double>(trials) - mc.mean * mc.mean;
  mc.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(trials));
  return mc;
}

/// Minimal property-test driver: calls `body(rng, case_index)` `cases`
/// times with a reproducible generator.
inline void for_all(std::uint64_t seed, int cases,
                    const std::function<void(reform::Xoshiro256&, int)>& body) {
  for (int i = 0; i < cases; ++i) {
    reform::Xoshiro256 rng(reform::derive_seed(seed, static_cast<std::uint64_t>(i), 0,
                                               reform::StreamPurpose::kProbe));
    body(rng, i);
  }
}

inline double uniform(reform::Xoshiro256& rng, double lo, double hi) {
  return lo + (hi - lo) * reform::uniform01(rng);
}

}  // namespace oracle
