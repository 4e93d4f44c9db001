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

// Closed-form expected rewards, fairness and incentive conditions for
// REFORM over RPTSC. These are the oracles the simulator is checked against.
//
// Notation used in argument names:
//   q        probability a peer reports the answer (prior belief)
//   q_post   probability a peer reports it given the agent's evaluation
//   r        probability the agent's reputation strictly exceeds a peer's
//   n        number of tasks (frequency sample size)
//   beta     decay factor at the report time

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "reform/core_model.hpp"

namespace reform {

namespace detail {
inline double match_within_sample(double q, std::uint32_t n) {
  return 1.0 - std::pow(1.0 - q, static_cast<double>(n) - 1.0);
}
}  // namespace detail

/// Expected plain-RPTSC reward.
inline double expected_reward_rptsc(double q, double q_post, std::uint32_t n, double alpha) {
  if (!(q > 0.0)) return 0.0;
  return alpha * (q_post / q - 1.0) * detail::match_within_sample(q, n);
}

/// RPTSC reward of a report that matches its peer, in expectation over the
/// frequency sample.
inline double optimal_reward(double q, std::uint32_t n, double alpha) {
  if (!(q > 0.0)) throw std::domain_error("optimal_reward: q must be > 0");
  return alpha * (1.0 / q - 1.0) * detail::match_within_sample(q, n);
}

/// Expected REFORM reward with two pairing chances.
inline double expected_reward_reform_k2(double q, double q_post, double r, std::uint32_t n,
                                        double alpha, double beta) {
  if (!(q > 0.0)) return 0.0;
  return alpha * beta * (q_post / q - 1.0 + r * (1.0 - q_post) * q_post / q) *
         detail::match_within_sample(q, n);
}

/// Expected REFORM reward with k pairing chances:
///
///   r q' M' sum_{i=1}^{k-1} d^{i-1} + E' (d^{k-1} + (1-r) sum_{i=2}^{k} d^{i-2}),
///   d = r (1 - q'),
///
/// all scaled by beta. A match on chance i < k follows i-1 mismatches that
/// each earned another chance, hence k-1 optimal-reward terms. Reduces to
/// beta*E' at k = 1 and to the two-chance formula at k = 2.
inline double expected_reward_reform_k(double q, double q_post, double r, std::uint32_t n,
                                       double alpha, double beta, std::uint32_t k) {
  if (k < 1) throw std::invalid_argument("expected_reward_reform_k: k ≥ 1 required");
  if (!(q > 0.0)) return 0.0;
  const double e = expected_reward_rptsc(q, q_post, n, alpha);
  const double m = optimal_reward(q, n, alpha);
  const double d = r - r * q_post;
  double optimal_terms = 0.0;
  double penalty_terms = 0.0;
  double power = 1.0;  // d^{i-1} for the first sum, d^{i-2} for the second
  for (std::uint32_t i = 1; i <= k - 1; ++i) {
    optimal_terms += power;
    penalty_terms += power;
    power *= d;
  }
  // power == d^{k-1}
  return beta * (r * q_post * m * optimal_terms + e * (power + (1.0 - r) * penalty_terms));
}

/// Expected REFORM reward of an agent that reports from its prior while
/// everyone else is trustworthy.
inline double expected_reward_random(double p, double r, std::uint32_t n, double alpha,
                                     double beta) {
  return alpha * beta * r * (1.0 - p) * detail::match_within_sample(p, n);
}

/// Beliefs of one agent. `posterior[x][y]` is the probability a peer reports
/// y when the agent's own evaluation is x.
struct BeliefModel {
  std::vector<double> prior;
  std::vector<std::vector<double>> posterior;
  double r = 0.5;
  std::uint32_t n = 50;
  double alpha = 11.0;
  double beta = 1.0;

  std::size_t answers() const noexcept { return prior.size(); }
  double p(std::size_t x) const { return prior.at(x); }
  double p_post(std::size_t x) const { return posterior.at(x).at(x); }
};

/// Throws std::invalid_argument naming the first violated invariant.
inline void validate_beliefs(const BeliefModel& b) {
  if (b.prior.empty()) throw std::invalid_argument("beliefs: prior must be non-empty");
  double sum = 0.0;
  for (double v : b.prior) {
    if (!(v > 0.0 && v < 1.0) && !(b.prior.size() == 1 && v == 1.0))
      throw std::invalid_argument("beliefs: prior must be fully mixed (entries in (0,1))");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("beliefs: prior must sum to 1");
  if (b.posterior.size() != b.prior.size())
    throw std::invalid_argument("beliefs: posterior must have one row per answer");
  for (const auto& row : b.posterior) {
    if (row.size() != b.prior.size())
      throw std::invalid_argument("beliefs: posterior rows must have one entry per answer");
    double rs = 0.0;
    for (double v : row) {
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("beliefs: posterior entries must lie in [0,1]");
      rs += v;
    }
    if (std::abs(rs - 1.0) > 1e-9)
      throw std::invalid_argument("beliefs: posterior rows must sum to 1");
  }
  if (!(b.r >= 0.0 && b.r <= 1.0)) throw std::invalid_argument("beliefs: r ∈ [0,1] required");
  if (b.n < 1) throw std::invalid_argument("beliefs: n ≥ 1 required");
  if (!(b.alpha > 0.0)) throw std::invalid_argument("beliefs: α > 0 required");
  if (!(b.beta > 0.0 && b.beta <= 1.0)) throw std::invalid_argument("beliefs: β ∈ (0,1] required");
}

/// Uniform prior; the posterior puts `diag` on the agent's own evaluation and
/// spreads the rest evenly.
inline BeliefModel symmetric_beliefs(std::size_t answers, double diag, double r,
                                     std::uint32_t n, double alpha, double beta = 1.0) {
  BeliefModel b;
  b.prior.assign(answers, 1.0 / static_cast<double>(answers));
  const double off = answers > 1 ? (1.0 - diag) / static_cast<double>(answers - 1) : 0.0;
  b.posterior.assign(answers, std::vector<double>(answers, off));
  for (std::size_t x = 0; x < answers; ++x) b.posterior[x][x] = answers > 1 ? diag : 1.0;
  b.r = r;
  b.n = n;
  b.alpha = alpha;
  b.beta = beta;
  return b;
}

/// Beliefs of a trustworthy agent inside the configured population: the
/// prior is the marginal report distribution and the posterior conditions
/// on the agent's own (noisy) evaluation. Decay is taken as constant.
inline BeliefModel population_beliefs(const SimConfig& cfg, double r) {
  const std::size_t K = cfg.answers.size();
  const auto truth = resolve_distribution(cfg.truth_prior, K);
  const auto ra_prior = resolve_distribution(cfg.ra_prior, K);
  const double total = cfg.mix.trustworthy + cfg.mix.random + cfg.mix.single_report;
  const double w_ta = cfg.mix.trustworthy / total;
  const double w_ra = cfg.mix.random / total;
  const double w_sr = cfg.mix.single_report / total;
  const double a = cfg.ta_accuracy;
  auto eval_given_truth = [&](std::size_t x, std::size_t t) {
    if (K == 1) return 1.0;
    return x == t ? a : (1.0 - a) / static_cast<double>(K - 1);
  };
  auto report_given_truth = [&](std::size_t y, std::size_t t) {
    return w_ta * eval_given_truth(y, t) + w_ra * ra_prior[y] +
           w_sr * (y == cfg.single_report_answer ? 1.0 : 0.0);
  };

  BeliefModel b;
  b.prior.assign(K, 0.0);
  for (std::size_t y = 0; y < K; ++y)
    for (std::size_t t = 0; t < K; ++t) b.prior[y] += truth[t] * report_given_truth(y, t);
  b.posterior.assign(K, std::vector<double>(K, 0.0));
  for (std::size_t x = 0; x < K; ++x) {
    double norm = 0.0;
    std::vector<double> truth_given_eval(K);
    for (std::size_t t = 0; t < K; ++t) {
      truth_given_eval[t] = truth[t] * eval_given_truth(x, t);
      norm += truth_given_eval[t];
    }
    for (std::size_t y = 0; y < K; ++y)
      for (std::size_t t = 0; t < K; ++t)
        b.posterior[x][y] += truth_given_eval[t] / norm * report_given_truth(y, t);
  }
  b.r = r;
  b.n = cfg.sample_size == 0 ? cfg.tasks : cfg.sample_size;
  b.alpha = cfg.alpha;
  b.beta = 1.0;
  return b;
}

/// Expected RPTSC reward before evaluation, all others trustworthy.
inline double pre_eval_expected_rptsc(const BeliefModel& b) {
  double sum = 0.0;
  for (std::size_t x = 0; x < b.answers(); ++x)
    sum += b.p(x) * expected_reward_rptsc(b.p(x), b.p_post(x), b.n, b.alpha);
  return sum;
}

/// Expected REFORM reward before evaluation; k = 2 is the standard case.
inline double pre_eval_expected_reform(const BeliefModel& b, std::uint32_t k = 2) {
  double sum = 0.0;
  for (std::size_t x = 0; x < b.answers(); ++x)
    sum += b.p(x) * expected_reward_reform_k(b.p(x), b.p_post(x), b.r, b.n, b.alpha, b.beta, k);
  return sum;
}

/// Prior-weighted expected reward of a random reporter.
inline double expected_reward_random_prior(const BeliefModel& b) {
  double sum = 0.0;
  for (std::size_t y = 0; y < b.answers(); ++y)
    sum += b.p(y) * expected_reward_random(b.p(y), b.r, b.n, b.alpha, b.beta);
  return sum;
}

struct SelfPredictor {
  std::vector<double> per_evaluation;  // delta for each evaluation x
  double value = 0.0;                  // max over x
};

/// Smallest delta in [0,1] with (p'_{x|x}/p_x) delta ≥ p'_{y|x}/p_y for all
/// y ≠ x. Throws std::domain_error naming (x, y) if the self-predicting
/// condition fails.
inline SelfPredictor self_predictor(const BeliefModel& b) {
  SelfPredictor out;
  out.per_evaluation.assign(b.answers(), 0.0);
  for (std::size_t x = 0; x < b.answers(); ++x) {
    const double own = b.posterior[x][x] / b.prior[x];
    double worst = 0.0;
    for (std::size_t y = 0; y < b.answers(); ++y) {
      if (y == x) continue;
      const double other = b.posterior[x][y] / b.prior[y];
      if (!(own > other))
        throw std::domain_error("self-predicting condition violated at (x=" + std::to_string(x) +
                                ", y=" + std::to_string(y) + ")");
      worst = std::max(worst, other / own);
    }
    out.per_evaluation[x] = std::clamp(worst, 0.0, 1.0);
  }
  out.value = *std::max_element(out.per_evaluation.begin(), out.per_evaluation.end());
  return out;
}

/// Variant with the "- 1" terms: (p'_{x|x}/p_x - 1) delta ≥ p'_{y|x}/p_y - 1.
/// Kept as a cross-check only.
inline SelfPredictor self_predictor_shifted(const BeliefModel& b) {
  SelfPredictor out;
  out.per_evaluation.assign(b.answers(), 0.0);
  for (std::size_t x = 0; x < b.answers(); ++x) {
    const double own = b.posterior[x][x] / b.prior[x] - 1.0;
    double worst = 0.0;
    for (std::size_t y = 0; y < b.answers(); ++y) {
      if (y == x) continue;
      const double other = b.posterior[x][y] / b.prior[y] - 1.0;
      if (!(own > other) || !(own > 0.0))
        throw std::domain_error("self-predicting condition violated at (x=" + std::to_string(x) +
                                ", y=" + std::to_string(y) + ")");
      worst = std::max(worst, other / own);
    }
    out.per_evaluation[x] = std::clamp(worst, 0.0, 1.0);
  }
  out.value = *std::max_element(out.per_evaluation.begin(), out.per_evaluation.end());
  return out;
}

struct AssumptionReport {
  double pre_eval_rptsc = 0.0;   // R̄(α)
  double pre_eval_reform = 0.0;  // R̄ef(α)
  double effort_gap = 0.0;       // c(e_H) - c(e_L)
  double delta = 0.0;
  bool a = false;   // R̄ > gap
  bool a1 = false;  // R̄ef - αβ ≥ gap
  bool b1 = false;  // (1-(1-p_x)^n)/(1-p_x^n) ≥ Δ for all x
  bool b2 = false;  // p_x/p_y ≥ Δ for all x, y
};

inline AssumptionReport check_assumptions(const BeliefModel& b, double cost_high,
                                          double cost_low, std::uint32_t k = 2) {
  AssumptionReport rep;
  const SelfPredictor sp = self_predictor(b);
  rep.delta = sp.value;
  rep.pre_eval_rptsc = pre_eval_expected_rptsc(b);
  rep.pre_eval_reform = pre_eval_expected_reform(b, k);
  rep.effort_gap = cost_high - cost_low;
  rep.a = rep.pre_eval_rptsc > rep.effort_gap;
  rep.a1 = rep.pre_eval_reform - b.alpha * b.beta >= rep.effort_gap;
  const double n = static_cast<double>(b.n);
  rep.b1 = true;
  rep.b2 = true;
  for (std::size_t x = 0; x < b.answers(); ++x) {
    const double px = b.p(x);
    const double lhs = (1.0 - std::pow(1.0 - px, n)) / (1.0 - std::pow(px, n));
    if (!(lhs >= sp.per_evaluation[x])) rep.b1 = false;
    for (std::size_t y = 0; y < b.answers(); ++y)
      if (!(px / b.p(y) >= sp.per_evaluation[x])) rep.b2 = false;
  }
  return rep;
}

/// Exerting effort beats random reporting: R̄ef - c(e_H) > E_ra - c(e_L).
inline bool effort_incentive_holds(const BeliefModel& b, double cost_high, double cost_low) {
  return pre_eval_expected_reform(b) - cost_high > expected_reward_random_prior(b) - cost_low;
}

/// Terminal inequality of the truthfulness argument: p'_x - p_x > -r for every x.
inline bool truthful_margin_holds(const BeliefModel& b) {
  for (std::size_t x = 0; x < b.answers(); ++x)
    if (!(b.p_post(x) - b.p(x) > -b.r)) return false;
  return true;
}

struct GammaFairness {
  double inverse = 0.0;  // expected gap between optimal and expected reward
  double gamma = std::numeric_limits<double>::infinity();
};

namespace detail {
inline GammaFairness make_gamma(double inverse) {
  GammaFairness g;
  g.inverse = inverse;
  g.gamma = inverse > 0.0 ? 1.0 / inverse : std::numeric_limits<double>::infinity();
  return g;
}
}  // namespace detail

inline GammaFairness gamma_rptsc(const BeliefModel& b) {
  double inv = 0.0;
  for (std::size_t x = 0; x < b.answers(); ++x)
    inv += (1.0 - b.p_post(x)) * detail::match_within_sample(b.p(x), b.n);
  return detail::make_gamma(b.alpha * inv);
}

inline GammaFairness gamma_reform(const BeliefModel& b) {
  double inv = 0.0;
  for (std::size_t x = 0; x < b.answers(); ++x)
    inv += (1.0 - b.r * b.p_post(x)) * (1.0 - b.p_post(x)) *
           detail::match_within_sample(b.p(x), b.n);
  return detail::make_gamma(b.alpha * inv);
}

struct ApproachComparison {
  double averaging = 0.0;     // average over w reports, match probability 1/2
  double extra_chance = 0.0;  // one extra pairing granted with probability r
};

/// g: reward on a match, l: reward on a mismatch.
inline ApproachComparison approach_comparison(double g, double l, double r) {
  if (!(g >= l)) throw std::invalid_argument("approach_comparison: g ≥ l required");
  return {0.5 * g + 0.5 * l, (0.5 + r / 4.0) * g + (0.5 - r / 4.0) * l};
}

}  // namespace reform
