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

// Round-based crowdsourcing simulator.
//
// Each round: draw task truths, assign every agent to one task, collect one
// report per agent, compute TERM round-scores, normalize them jointly,
// update reputations, then settle every report against a frozen snapshot of
// the updated reputations. Randomness comes from per-(round, agent, purpose)
// streams, so results do not depend on the worker count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "reform/analytics.hpp"
#include "reform/core_model.hpp"
#include "reform/reform.hpp"
#include "reform/reward.hpp"
#include "reform/rng.hpp"
#include "reform/term.hpp"

namespace reform {

struct RunOptions {
  unsigned threads = 1;
};

/// REFORM_SIM_THREADS caps the worker count; defaults to the hardware count.
inline unsigned threads_from_env() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("REFORM_SIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

/// Runs fn(begin, end) over contiguous chunks of [0, count).
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    fn(0, count);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

/// Pairing counts by (agent strategy, peer strategy): how often a peer was
/// drawn and how often the agent's reputation strictly exceeded it.
struct PairingStats {
  std::array<std::array<std::uint64_t, kStrategyTagCount>, kStrategyTagCount> drawn{};
  std::array<std::array<std::uint64_t, kStrategyTagCount>, kStrategyTagCount> exceeded{};

  void add(StrategyTag agent, StrategyTag peer, bool agent_higher) {
    const auto a = static_cast<std::size_t>(agent);
    const auto p = static_cast<std::size_t>(peer);
    drawn[a][p] += 1;
    exceeded[a][p] += agent_higher ? 1 : 0;
  }
  void merge(const PairingStats& o) {
    for (std::size_t a = 0; a < kStrategyTagCount; ++a)
      for (std::size_t p = 0; p < kStrategyTagCount; ++p) {
        drawn[a][p] += o.drawn[a][p];
        exceeded[a][p] += o.exceeded[a][p];
      }
  }
  /// Fraction of pairings where an `agent` strategy outranked a `peer`
  /// strategy; NaN when no such pairing occurred.
  double rate(StrategyTag agent, StrategyTag peer) const {
    const auto a = static_cast<std::size_t>(agent);
    const auto p = static_cast<std::size_t>(peer);
    return drawn[a][p] ? static_cast<double>(exceeded[a][p]) / static_cast<double>(drawn[a][p])
                       : std::nan("");
  }
  /// Same, pooled over all peer strategies.
  double rate(StrategyTag agent) const {
    const auto a = static_cast<std::size_t>(agent);
    std::uint64_t d = 0, e = 0;
    for (std::size_t p = 0; p < kStrategyTagCount; ++p) {
      d += drawn[a][p];
      e += exceeded[a][p];
    }
    return d ? static_cast<double>(e) / static_cast<double>(d) : std::nan("");
  }
};

struct StrategyAggregate {
  std::uint32_t count = 0;
  double total_reward = 0.0;
  double mean_reward = 0.0;
  double mean_optimal = 0.0;
  std::uint32_t matched = 0;
};

struct RoundLedger {
  RoundIndex round = 0;
  std::vector<Task> tasks;
  std::vector<Report> reports;  // all vectors below are indexed by agent id
  std::vector<StrategyTag> tags;
  RoundScoreTable round_scores;
  std::vector<RewardOutcome> outcomes;
  std::vector<double> match_frequency;  // f(y_i) counting the report itself
  std::vector<double> optimal_reward;   // reward the report would earn on a match
  std::vector<double> omega_before;     // reputation entering the round
  std::vector<double> omega_after;      // snapshot used for pairing
  double budget = 0.0;
  std::array<StrategyAggregate, kStrategyTagCount> by_strategy{};
  PairingStats pairing;

  const StrategyAggregate& aggregate(StrategyTag tag) const {
    return by_strategy[static_cast<std::size_t>(tag)];
  }
};

struct ExperimentRecord {
  SimConfig config;
  std::vector<RoundLedger> rounds;
  std::vector<AgentState> final_population;
};

/// Strategy counts round toward trustworthy: every other share is floored
/// and the remainder goes to trustworthy agents. Tags are shuffled so ids
/// carry no strategy information.
template <class Rng>
std::vector<AgentState> build_population(const SimConfig& cfg, Rng& rng) {
  const std::size_t K = cfg.answers.size();
  const double total = cfg.mix.trustworthy + cfg.mix.random + cfg.mix.single_report;
  auto share = [&](double frac) {
    return static_cast<std::uint32_t>(std::floor(frac / total * cfg.agents + 1e-9));
  };
  const std::uint32_t n_ra = share(cfg.mix.random);
  const std::uint32_t n_sr = share(cfg.mix.single_report);
  const std::uint32_t n_ta = cfg.agents - n_ra - n_sr;

  std::vector<StrategyTag> tags;
  tags.reserve(cfg.agents);
  tags.insert(tags.end(), n_ta, StrategyTag::kTrustworthy);
  tags.insert(tags.end(), n_ra, StrategyTag::kRandom);
  tags.insert(tags.end(), n_sr, StrategyTag::kSingleReport);
  shuffle(rng, std::span<StrategyTag>(tags));

  std::vector<AgentState> agents(cfg.agents);
  const double initial = gompertz(0.0, cfg.gompertz);
  for (AgentId id = 0; id < cfg.agents; ++id) {
    auto& a = agents[id];
    a.id = id;
    a.term_score = initial;
    switch (tags[id]) {
      case StrategyTag::kTrustworthy: a.strategy = Trustworthy{cfg.ta_accuracy, cfg.ta_time}; break;
      case StrategyTag::kRandom:
        a.strategy = RandomReporter{resolve_distribution(cfg.ra_prior, K), cfg.ra_time};
        break;
      default: a.strategy = SingleReport{cfg.single_report_answer, cfg.sr_time}; break;
    }
  }
  return agents;
}

inline std::vector<AgentState> build_population(const SimConfig& cfg) {
  auto rng = make_stream(cfg.seed, 0, kNoAgent, StreamPurpose::kPopulation);
  return build_population(cfg, rng);
}

/// One report for the given strategy on the given task.
template <class Rng>
Report make_report(const Strategy& strategy, AgentId agent, const Task& task, RoundIndex round,
                   std::size_t answer_count, Rng& rng) {
  const auto K = static_cast<AnswerId>(answer_count);
  auto evaluate = [&](double accuracy) -> AnswerId {
    if (K == 1 || bernoulli(rng, accuracy)) return task.true_answer;
    return (task.true_answer + 1 + static_cast<AnswerId>(uniform_index(rng, K - 1))) % K;
  };
  Report r;
  r.agent = agent;
  r.task = task.id;
  r.round = round;
  struct Visitor {
    Report& r;
    Rng& rng;
    const Task& task;
    decltype(evaluate)& eval;
    AnswerId K;
    void operator()(const Trustworthy& s) {
      r.answer = eval(s.accuracy);
      r.time = s.solve_time.sample(rng, task.deadline);
    }
    void operator()(const RandomReporter& s) {
      r.answer = static_cast<AnswerId>(categorical(rng, std::span<const double>(s.prior)));
      r.time = s.report_time.sample(rng, task.deadline);
    }
    void operator()(const SingleReport& s) {
      r.answer = s.fixed_answer;
      r.time = s.report_time.sample(rng, task.deadline);
    }
    void operator()(const Misreport& s) {
      r.answer = (eval(s.accuracy) + s.shift) % K;
      r.time = s.solve_time.sample(rng, task.deadline);
    }
  };
  std::visit(Visitor{r, rng, task, evaluate, K}, strategy);
  return r;
}

/// Balanced random assignment: every task receives floor(m/n) agents and
/// the m mod n leftovers go one per task in a shuffled task order.
inline TaskRoster assign_tasks(std::uint32_t agents, std::uint32_t tasks, std::uint64_t seed,
                               RoundIndex round) {
  if (static_cast<std::uint64_t>(tasks) * 2 > agents)
    throw std::invalid_argument("assign_tasks: every task needs at least two agents");
  auto rng = make_stream(seed, round, kNoAgent, StreamPurpose::kAssignment);
  std::vector<AgentId> order(agents);
  for (AgentId i = 0; i < agents; ++i) order[i] = i;
  shuffle(rng, std::span<AgentId>(order));
  std::vector<TaskId> task_order(tasks);
  for (TaskId j = 0; j < tasks; ++j) task_order[j] = j;
  shuffle(rng, std::span<TaskId>(task_order));

  TaskRoster roster;
  roster.members.resize(tasks);
  const std::uint32_t full = (agents / tasks) * tasks;
  for (std::uint32_t i = 0; i < agents; ++i) {
    const TaskId task = i < full ? i % tasks : task_order[i - full];
    roster.members[task].push_back(order[i]);
  }
  for (auto& m : roster.members) std::sort(m.begin(), m.end());
  return roster;
}

inline std::vector<Task> draw_tasks(const SimConfig& cfg, RoundIndex round) {
  auto rng = make_stream(cfg.seed, round, kNoAgent, StreamPurpose::kTaskTruth);
  const auto prior = resolve_distribution(cfg.truth_prior, cfg.answers.size());
  std::vector<Task> tasks(cfg.tasks);
  for (TaskId j = 0; j < cfg.tasks; ++j)
    tasks[j] = {j, static_cast<AnswerId>(categorical(rng, std::span<const double>(prior))),
                cfg.deadline};
  return tasks;
}

/// Assignment plus one report per agent; `reports` is indexed by agent id.
struct RoundReports {
  TaskRoster roster;
  std::vector<Report> reports;
};

inline RoundReports assign_and_report(std::span<const AgentState> population,
                                      std::span<const Task> tasks, RoundIndex round,
                                      const SimConfig& cfg) {
  RoundReports out;
  out.roster = assign_tasks(static_cast<std::uint32_t>(population.size()),
                            static_cast<std::uint32_t>(tasks.size()), cfg.seed, round);
  out.reports.resize(population.size());
  for (TaskId j = 0; j < out.roster.members.size(); ++j)
    for (AgentId id : out.roster.members[j]) {
      auto rng = make_stream(cfg.seed, round, id, StreamPurpose::kReport);
      out.reports[id] = make_report(population[id].strategy, id, tasks[j], round,
                                    cfg.answers.size(), rng);
    }
  return out;
}

/// Reward a report would earn on a match given its own frequency.
inline double optimal_reward_for(Mechanism mechanism, double alpha, double freq,
                                 std::uint32_t sample_total, const DecayFactor& decay, double t) {
  double factor = 0.0;
  switch (mechanism) {
    case Mechanism::kReformRptsc:
    case Mechanism::kRptsc: factor = optimal_reward(freq, sample_total, alpha); break;
    case Mechanism::kOutputAgreement: factor = alpha; break;
    case Mechanism::kPts: factor = alpha / freq; break;
  }
  return apply_decay(factor, t, decay);
}

class Simulation {
 public:
  explicit Simulation(SimConfig cfg, RunOptions options = {})
      : cfg_(validate_config(std::move(cfg))), options_(options) {
    population_ = build_population(cfg_);
  }

  /// Starts from a caller-built population (ids must be 0..m-1 in order).
  Simulation(SimConfig cfg, std::vector<AgentState> population, RunOptions options = {})
      : cfg_(validate_config(std::move(cfg))), options_(options), population_(std::move(population)) {
    if (population_.size() != cfg_.agents)
      throw ConfigError("population size must equal the configured agent count");
    for (AgentId i = 0; i < population_.size(); ++i)
      if (population_[i].id != i) throw ConfigError("population ids must be 0..m-1 in order");
  }

  const SimConfig& config() const noexcept { return cfg_; }
  const std::vector<AgentState>& population() const noexcept { return population_; }
  RoundIndex next_round() const noexcept { return round_; }

  RoundLedger step();

 private:
  SimConfig cfg_;
  RunOptions options_;
  std::vector<AgentState> population_;
  RoundIndex round_ = 1;
};

inline RoundLedger Simulation::step() {
  const RoundIndex round = round_++;
  const std::size_t m = population_.size();
  const std::size_t K = cfg_.answers.size();
  const unsigned threads = options_.threads;

  RoundLedger ledger;
  ledger.round = round;
  ledger.tasks = draw_tasks(cfg_, round);
  RoundReports collected = assign_and_report(population_, ledger.tasks, round, cfg_);
  const TaskRoster& roster = collected.roster;
  ledger.reports = std::move(collected.reports);
  const std::span<const Report> reports(ledger.reports);

  ledger.tags.resize(m);
  ledger.omega_before.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    ledger.tags[i] = tag_of(population_[i].strategy);
    ledger.omega_before[i] = population_[i].term_score;
  }

  // Frequency samples and raw round-scores, independent per agent.
  std::vector<FrequencySample> samples(m);
  std::vector<double> raw(m, 0.0);
  ledger.match_frequency.resize(m);
  parallel_for(m, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto id = static_cast<AgentId>(i);
      const Report& report = reports[i];
      auto freq_rng = make_stream(cfg_.seed, round, id, StreamPurpose::kFrequencySample);
      samples[i] = sample_frequency(roster, reports, report, cfg_.sample_size, K, freq_rng);
      ledger.match_frequency[i] = samples[i].own_frequency(report.answer);
      auto peer_rng = make_stream(cfg_.seed, round, id, StreamPurpose::kTermPeer);
      const AgentId peer = select_peer(std::span<const AgentId>(roster.members[report.task]), id, peer_rng);
      raw[i] = round_score(report, reports[peer].answer, ledger.match_frequency[i]);
    }
  });

  ledger.round_scores = normalize_round(std::move(raw), round);
  apply_round(population_, ledger.round_scores, cfg_.lambda, cfg_.gompertz);
  ledger.omega_after.resize(m);
  for (std::size_t i = 0; i < m; ++i) ledger.omega_after[i] = population_[i].term_score;

  // Settlement against the frozen reputation snapshot.
  ledger.outcomes.resize(m);
  ledger.optimal_reward.resize(m);
  std::mutex stats_mutex;
  const AnyScheme scheme = make_scheme(mechanism_name(cfg_.mechanism), cfg_.alpha);
  parallel_for(m, threads, [&](std::size_t begin, std::size_t end) {
    PairingStats local;
    for (std::size_t i = begin; i < end; ++i) {
      const auto id = static_cast<AgentId>(i);
      const Report& report = reports[i];
      const double own_omega = ledger.omega_after[i];
      const auto members = std::span<const AgentId>(roster.members[report.task]);
      auto draw_peer = [&](Xoshiro256& rng) {
        const AgentId p = select_peer(members, id, rng);
        local.add(ledger.tags[i], ledger.tags[p], own_omega > ledger.omega_after[p]);
        return PeerView{reports[p].answer, ledger.omega_after[p]};
      };
      auto rng = make_stream(cfg_.seed, round, id, StreamPurpose::kPairing);
      ledger.outcomes[i] = std::visit(
          [&](const auto& s) {
            if (cfg_.mechanism == Mechanism::kReformRptsc)
              return run_pairing(report, own_omega, draw_peer, s, cfg_.decay, samples[i], cfg_.k, rng);
            return settle_plain(report, draw_peer, s, cfg_.decay, samples[i], rng);
          },
          scheme);
      ledger.optimal_reward[i] =
          optimal_reward_for(cfg_.mechanism, cfg_.alpha, ledger.match_frequency[i],
                             samples[i].total(), cfg_.decay, report.time);
    }
    // Integer counts: merge order does not matter.
    std::lock_guard lock(stats_mutex);
    ledger.pairing.merge(local);
  });

  // Sequential aggregation keeps the floating-point sums order-independent.
  for (std::size_t i = 0; i < m; ++i) {
    const double reward = ledger.outcomes[i].reward;
    ledger.budget += reward;
    auto& agg = ledger.by_strategy[static_cast<std::size_t>(ledger.tags[i])];
    agg.count += 1;
    agg.total_reward += reward;
    agg.mean_optimal += ledger.optimal_reward[i];
    agg.matched += ledger.outcomes[i].matched ? 1 : 0;
  }
  for (auto& agg : ledger.by_strategy)
    if (agg.count) {
      agg.mean_reward = agg.total_reward / agg.count;
      agg.mean_optimal /= agg.count;
    }
  return ledger;
}

inline ExperimentRecord run_experiment(const SimConfig& cfg, RunOptions options = {}) {
  Simulation sim(cfg, options);
  ExperimentRecord record;
  record.config = sim.config();
  record.rounds.reserve(record.config.rounds);
  for (std::uint32_t r = 0; r < record.config.rounds; ++r) record.rounds.push_back(sim.step());
  record.final_population = sim.population();
  return record;
}

}  // namespace reform
