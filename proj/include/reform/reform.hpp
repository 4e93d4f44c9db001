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

// REFORM pairing: a report is compared against up to k random co-workers of
// the same task. The first match pays the scheme's match reward. After a
// mismatch the agent gets another chance only if its reputation is strictly
// higher than that peer's and chances remain; otherwise the mismatch factor
// is paid.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "reform/core_model.hpp"
#include "reform/reward.hpp"
#include "reform/rng.hpp"

namespace reform {

/// Uniform draw among the members other than `self`. If `self` is not a
/// member every member is eligible.
template <class Rng>
AgentId select_peer(std::span<const AgentId> members, AgentId self, Rng& rng) {
  const auto pos = std::find(members.begin(), members.end(), self);
  if (pos == members.end()) {
    if (members.empty()) throw std::invalid_argument("select_peer: task has no reports");
    return members[uniform_index(rng, members.size())];
  }
  if (members.size() < 2) throw std::invalid_argument("select_peer: task needs ≥ 2 reports");
  auto idx = static_cast<std::size_t>(uniform_index(rng, members.size() - 1));
  if (idx >= static_cast<std::size_t>(pos - members.begin())) ++idx;
  return members[idx];
}

struct PeerView {
  AnswerId answer = 0;
  double omega = 0.0;
};

template <class F, class Rng>
concept PeerSource = requires(F f, Rng& rng) {
  { f(rng) } -> std::convertible_to<PeerView>;
};

template <PeerFactorScheme Scheme, class Rng, PeerSource<Rng> DrawPeer>
RewardOutcome run_pairing(const Report& report, double agent_omega, DrawPeer&& draw_peer,
                          const Scheme& scheme, const DecayFactor& decay,
                          const FrequencySample& sample, std::uint32_t k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("run_pairing: k ≥ 1 required");
  for (std::uint32_t chance = 1;; ++chance) {
    const PeerView peer = draw_peer(rng);
    const double freq = sample.frequency(report.answer, peer.answer);
    if (peer.answer == report.answer)
      return {apply_decay(scheme.on_match(report, freq), report.time, decay), chance, true, false};
    // Ties grant no extra chance.
    if (agent_omega <= peer.omega || chance == k)
      return {apply_decay(scheme.on_mismatch(report, freq), report.time, decay), chance, false,
              true};
  }
}

/// The bare scheme: one peer, no reputation channel.
template <PeerFactorScheme Scheme, class Rng, PeerSource<Rng> DrawPeer>
RewardOutcome settle_plain(const Report& report, DrawPeer&& draw_peer, const Scheme& scheme,
                           const DecayFactor& decay, const FrequencySample& sample, Rng& rng) {
  const PeerView peer = draw_peer(rng);
  const double freq = sample.frequency(report.answer, peer.answer);
  RewardOutcome out;
  out.matched = peer.answer == report.answer;
  out.penalized = !out.matched;
  const double factor =
      out.matched ? scheme.on_match(report, freq) : scheme.on_mismatch(report, freq);
  out.reward = apply_decay(factor, report.time, decay);
  return out;
}

}  // namespace reform
