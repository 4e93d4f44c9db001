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

// Peer-factor reward schemes, the decay factor and the sampled frequency
// oracle.
//
// A reward is peer_factor(report) * beta(t). Schemes expose the factor for
// a matched and a mismatched peer separately so the pairing engine can stop
// at the first match.

#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "reform/core_model.hpp"
#include "reform/rng.hpp"

namespace reform {

template <class S>
concept PeerFactorScheme = requires(const S& s, const Report& r, double f) {
  { s.on_match(r, f) } -> std::convertible_to<double>;
  { s.on_mismatch(r, f) } -> std::convertible_to<double>;
  { s.name() } -> std::convertible_to<std::string_view>;
};

/// alpha * (1{match} / f - 1), or 0 when f = 0.
inline double rptsc_peer_factor(bool match, double freq, double alpha) {
  if (freq == 0.0) return 0.0;
  return alpha * ((match ? 1.0 / freq : 0.0) - 1.0);
}

struct RptscScheme {
  double alpha = 10.0;
  std::string_view name() const noexcept { return "rptsc"; }
  double on_match(const Report&, double freq) const { return rptsc_peer_factor(true, freq, alpha); }
  double on_mismatch(const Report&, double freq) const {
    return rptsc_peer_factor(false, freq, alpha);
  }
};

/// Plain output agreement: alpha on a match, nothing otherwise.
inline double output_agreement_peer_factor(bool match, double alpha) {
  return match ? alpha : 0.0;
}

struct OutputAgreementScheme {
  double alpha = 1.0;
  std::string_view name() const noexcept { return "output-agreement"; }
  double on_match(const Report&, double) const { return output_agreement_peer_factor(true, alpha); }
  double on_mismatch(const Report&, double) const {
    return output_agreement_peer_factor(false, alpha);
  }
};

/// Peer truth serum: alpha * 1{match} / f.
struct PtsScheme {
  double alpha = 1.0;
  std::string_view name() const noexcept { return "pts"; }
  double on_match(const Report&, double freq) const { return freq > 0.0 ? alpha / freq : 0.0; }
  double on_mismatch(const Report&, double) const { return 0.0; }
};

static_assert(PeerFactorScheme<RptscScheme>);
static_assert(PeerFactorScheme<OutputAgreementScheme>);
static_assert(PeerFactorScheme<PtsScheme>);

using AnyScheme = std::variant<RptscScheme, OutputAgreementScheme, PtsScheme>;

inline AnyScheme make_scheme(std::string_view name, double alpha) {
  if (name == "rptsc" || name == "reform-rptsc") return RptscScheme{alpha};
  if (name == "output-agreement") return OutputAgreementScheme{alpha};
  if (name == "pts") return PtsScheme{alpha};
  throw std::invalid_argument("unknown reward scheme '" + std::string(name) + "'");
}

inline double apply_decay(double peer_factor_value, double t, const DecayFactor& decay) {
  return peer_factor_value * decay_value(decay, t);
}

/// Answer counts over one sampled report from each of a set of other tasks.
///
/// The frequency of an answer is taken over the sample plus one extra
/// report: the current peer's when settling a reward, so a mismatched
/// answer that never occurs in the sample has frequency 0. When the extra
/// report equals the answer (the matched case) the value coincides with the
/// self-inclusive count (b + 1) / total.
struct FrequencySample {
  std::vector<std::uint32_t> counts;
  std::uint32_t drawn = 0;

  std::uint32_t total() const noexcept { return drawn + 1; }

  double frequency(AnswerId answer, AnswerId extra) const {
    const auto hits = counts.at(answer) + (extra == answer ? 1u : 0u);
    return static_cast<double>(hits) / static_cast<double>(total());
  }

  double own_frequency(AnswerId answer) const { return frequency(answer, answer); }
};

/// Who answered which task in one round.
struct TaskRoster {
  std::vector<std::vector<AgentId>> members;  // indexed by task id

  std::size_t task_count() const noexcept { return members.size(); }
};

/// Draws one uniformly random report from each of (sample_size - 1) tasks
/// other than the target's. When fewer than all other tasks are needed the
/// tasks are a uniform random subset. `reports` is indexed by agent id.
template <class Rng>
FrequencySample sample_frequency(const TaskRoster& roster, std::span<const Report> reports,
                                 const Report& target, std::uint32_t sample_size,
                                 std::size_t answer_count, Rng& rng) {
  const std::size_t n = roster.task_count();
  if (n < 2) throw std::invalid_argument("sample_frequency: need at least two tasks");
  if (sample_size < 2 || sample_size > n)
    throw std::invalid_argument("sample_frequency: sample size must lie in [2, tasks]");
  FrequencySample sample;
  sample.counts.assign(answer_count, 0);

  auto draw_from = [&](std::size_t task) {
    const auto& members = roster.members[task];
    if (members.empty())
      throw std::invalid_argument("sample_frequency: task " + std::to_string(task) +
                                  " has no reports");
    const AgentId pick = members[uniform_index(rng, members.size())];
    sample.counts.at(reports[pick].answer) += 1;
    sample.drawn += 1;
  };

  const std::uint32_t wanted = sample_size - 1;
  if (wanted == n - 1) {
    for (std::size_t task = 0; task < n; ++task)
      if (task != target.task) draw_from(task);
  } else {
    std::vector<std::size_t> others;
    others.reserve(n - 1);
    for (std::size_t task = 0; task < n; ++task)
      if (task != target.task) others.push_back(task);
    for (std::uint32_t i = 0; i < wanted; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, others.size() - i));
      std::swap(others[i], others[j]);
      draw_from(others[i]);
    }
  }
  return sample;
}

}  // namespace reform
