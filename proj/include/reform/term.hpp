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

// TERM: temporal reputation.
//
// A round-score rewards a report that matches a random co-worker, scaled by
// the inverse of the answer's sampled frequency and of the report time.
// Round-scores are min-max normalized across all agents of the round,
// folded into a discounted cumulative score, and mapped through a Gompertz
// curve to a reputation in (0, 1).
//
// Normalization needs the whole round, so updates are staged: collect every
// raw score, normalize once, then apply to each agent's history.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reform/core_model.hpp"

namespace reform {

/// Indicator of a match over (frequency · time).
inline double round_score(const Report& report, AnswerId peer_answer, double freq) {
  if (!(report.time > 0.0)) throw std::invalid_argument("round_score: report time must be > 0");
  if (report.answer != peer_answer) return 0.0;
  if (!(freq > 0.0) || freq > 1.0)
    throw std::invalid_argument("round_score: matched report needs freq ∈ (0,1]");
  return 1.0 / (freq * report.time);
}

struct RoundScoreTable {
  RoundIndex round = 0;
  std::vector<double> raw;         // indexed by agent id
  std::vector<double> normalized;  // in [0, 1]
  double min_raw = 0.0;
  double max_raw = 0.0;
};

/// Affine map of the round's scores onto [0, 1]; all zeros when every score
/// is equal.
inline RoundScoreTable normalize_round(std::vector<double> raw, RoundIndex round = 0) {
  if (raw.empty()) throw std::invalid_argument("normalize_round: empty round");
  RoundScoreTable table;
  table.round = round;
  auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  table.min_raw = *lo;
  table.max_raw = *hi;
  table.normalized.assign(raw.size(), 0.0);
  if (table.max_raw != table.min_raw) {
    const double span = table.max_raw - table.min_raw;
    for (std::size_t i = 0; i < raw.size(); ++i)
      table.normalized[i] = std::clamp((raw[i] - table.min_raw) / span, 0.0, 1.0);
  }
  table.raw = std::move(raw);
  return table;
}

/// Discounted sum with the newest entry at weight one. Evaluated by Horner's
/// rule so it is bit-identical to the incremental update psi = lambda*psi + x.
inline double cumulative_score(std::span<const double> history, double lambda) {
  double psi = 0.0;
  for (double x : history) psi = lambda * psi + x;
  return psi;
}

inline double gompertz(double psi, const GompertzParams& g = {}) {
  return g.a * std::exp(g.b * std::exp(g.c * psi));
}

/// Appends one normalized round-score and refreshes psi and Omega. A second
/// update for the same round is an error.
inline void term_update(AgentState& agent, double normalized_score, RoundIndex round,
                        double lambda, const GompertzParams& g = {}) {
  if (agent.last_update && *agent.last_update == round)
    throw std::logic_error("term_update: agent " + std::to_string(agent.id) +
                           " already updated in round " + std::to_string(round));
  if (!(normalized_score >= 0.0 && normalized_score <= 1.0))
    throw std::invalid_argument("term_update: normalized score outside [0,1]");
  agent.history.push_back(normalized_score);
  agent.cumulative_score = lambda * agent.cumulative_score + normalized_score;
  agent.term_score = gompertz(agent.cumulative_score, g);
  agent.last_update = round;
}

/// Single-agent convenience over the staged path: computes the raw score
/// and maps it with the round's known min/max.
inline void term_update(AgentState& agent, const Report& report, AnswerId peer_answer,
                        double freq, double round_min, double round_max, double lambda,
                        const GompertzParams& g = {}) {
  const double raw = round_score(report, peer_answer, freq);
  const double normalized =
      round_max != round_min ? std::clamp((raw - round_min) / (round_max - round_min), 0.0, 1.0)
                             : 0.0;
  term_update(agent, normalized, report.round, lambda, g);
}

/// Applies a normalized table to a population whose ids index the table.
inline void apply_round(std::span<AgentState> agents, const RoundScoreTable& table,
                        double lambda, const GompertzParams& g = {}) {
  if (table.normalized.size() != agents.size())
    throw std::invalid_argument("apply_round: table does not cover the population");
  for (auto& agent : agents) term_update(agent, table.normalized[agent.id], table.round, lambda, g);
}

}  // namespace reform
