#pragma once

// Seeded Monte Carlo estimation of how often malicious content survives
// selection, for a retrieval of k documents under a given attack placement and
// judge error model.
//
// Trials are independent: trial t draws everything from streams keyed by
// (seed, scenario key hash, t), so estimates do not depend on the number of
// worker threads.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "relrag/bounds.hpp"
#include "relrag/document.hpp"
#include "relrag/error.hpp"
#include "relrag/judge.hpp"
#include "relrag/mis.hpp"
#include "relrag/oracle.hpp"
#include "relrag/pipeline.hpp"
#include "relrag/rng.hpp"
#include "relrag/sampling.hpp"
#include "relrag/stats.hpp"

namespace relrag {

struct NoAttack {};
/// Marks the listed 1-based positions malicious.
struct RolePlacement {
  std::vector<int> positions;
};
/// Marks the last `count` positions malicious.
struct SuffixAttack {
  int count = 0;
};
using Attack = std::variant<NoAttack, RolePlacement, SuffixAttack>;

struct DirectPipeline {};
struct SamplingPipeline {
  int rounds = 20;
  int context_size = 2;
};
using Pipeline = std::variant<DirectPipeline, SamplingPipeline>;

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct SimScenario {
  int k = 10;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double flip_noise = 0.0;
  double irrelevance_rate = 0.0;  // chance a non-attacked document is irrelevant
  int trials = 5000;
  Attack attack = NoAttack{};
  Pipeline pipeline = DirectPipeline{};
  WeightScheme scheme = Exponential{0.9};
  std::uint64_t seed = 0;

  std::vector<int> malicious_positions() const {
    std::vector<int> out;
    if (const auto* p = std::get_if<RolePlacement>(&attack)) {
      out = p->positions;
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
    } else if (const auto* s = std::get_if<SuffixAttack>(&attack)) {
      for (int i = k - s->count + 1; i <= k; ++i) out.push_back(i);
    }
    return out;
  }

  int k_prime() const { return static_cast<int>(malicious_positions().size()); }

  std::string attack_label() const {
    if (std::holds_alternative<RolePlacement>(attack)) {
      std::vector<int> pos = malicious_positions();
      std::string s = "positions:";
      for (std::size_t i = 0; i < pos.size(); ++i) s += (i ? "|" : "") + std::to_string(pos[i]);
      return s;
    }
    if (const auto* s = std::get_if<SuffixAttack>(&attack)) return "suffix:" + std::to_string(s->count);
    return "none";
  }

  std::string pipeline_label() const {
    return std::holds_alternative<DirectPipeline>(pipeline) ? "direct" : "sampling";
  }

  int rounds() const {
    const auto* s = std::get_if<SamplingPipeline>(&pipeline);
    return s ? s->rounds : 0;
  }
  int context_size() const {
    const auto* s = std::get_if<SamplingPipeline>(&pipeline);
    return s ? s->context_size : 0;
  }

  /// Canonical description of every field except the seed.
  std::string key() const {
    std::string s = "pipeline=" + pipeline_label();
    if (const auto* sp = std::get_if<SamplingPipeline>(&pipeline))
      s += ";T=" + std::to_string(sp->rounds) + ";m=" + std::to_string(sp->context_size);
    s += ";attack=" + attack_label();
    s += ";k=" + std::to_string(k);
    s += ";eps1=" + format_double(eps1);
    s += ";eps2=" + format_double(eps2);
    s += ";flip=" + format_double(flip_noise);
    s += ";irrelevant=" + format_double(irrelevance_rate);
    s += ";scheme=" + describe(scheme);
    s += ";trials=" + std::to_string(trials);
    return s;
  }

  void validate() const {
    if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    if (trials < 1) fail(ErrorCode::InvalidArgument, "trials must be >= 1");
    if (!(irrelevance_rate >= 0.0 && irrelevance_rate <= 1.0))
      fail(ErrorCode::InvalidArgument, "irrelevance rate must lie in [0,1]");
    JudgeModel::stochastic(eps1, eps2, flip_noise);
    if (const auto* p = std::get_if<RolePlacement>(&attack)) {
      for (int pos : p->positions)
        if (pos < 1 || pos > k)
          fail(ErrorCode::InvalidArgument, "attack position " + std::to_string(pos) + " outside 1..k");
    }
    if (const auto* s = std::get_if<SuffixAttack>(&attack)) {
      if (s->count < 0 || s->count > k) fail(ErrorCode::InvalidArgument, "suffix count must lie in [0, k]");
    }
    if (std::holds_alternative<DirectPipeline>(pipeline) && k > kMisVertexCap)
      fail(ErrorCode::GraphTooLarge, "direct MIS supports at most " + std::to_string(kMisVertexCap) +
                                         " documents; use the sampling pipeline");
    if (const auto* sp = std::get_if<SamplingPipeline>(&pipeline)) {
      SamplingPlan{sp->rounds, sp->context_size, scheme, 0}.validate();
      if (sp->rounds > kMisVertexCap)
        fail(ErrorCode::GraphTooLarge, "sampling aggregation supports at most " +
                                           std::to_string(kMisVertexCap) + " rounds");
    }
    make_weights(scheme, k);
  }
};

struct TrialOutcome {
  std::uint64_t trial = 0;
  std::vector<int> malicious;  // attacked positions
  std::vector<int> dropped;    // positions removed by the relevance filter
  std::vector<int> chosen;     // documents (direct) or rounds (sampling)
  bool malicious_in_mis = false;
  bool malicious_in_chosen = false;
  bool abstained = false;
  Token answer;
};

/// One trial of `s`. `scenario_hash` is fnv1a(s.key()).
inline TrialOutcome run_trial(const SimScenario& s, std::uint64_t scenario_hash, std::uint64_t trial) {
  TrialOutcome out;
  out.trial = trial;
  const std::uint64_t key = rng::derive(s.seed, {rng::kTagTrial, scenario_hash, trial});

  std::vector<Role> roles(static_cast<std::size_t>(s.k), Role::BenignRelevant);
  out.malicious = s.malicious_positions();
  for (int pos : out.malicious) roles[static_cast<std::size_t>(pos - 1)] = Role::Malicious;
  if (s.irrelevance_rate > 0.0) {
    rng::Stream noise(rng::derive(key, {rng::kTagRoles}));
    for (auto& r : roles)
      if (r != Role::Malicious && noise.bernoulli(s.irrelevance_rate)) r = Role::Irrelevant;
  }
  for (std::size_t i = 0; i < roles.size(); ++i)
    if (roles[i] == Role::Irrelevant) out.dropped.push_back(static_cast<int>(i) + 1);

  const RetrievalSet set = make_retrieval_set(roles, s.scheme);
  const auto verdicts = simulated_verdicts(set);
  const JudgeModel judge = JudgeModel::stochastic(s.eps1, s.eps2, s.flip_noise);
  const SimulatedOracle oracle;

  if (std::holds_alternative<DirectPipeline>(s.pipeline)) {
    const DirectOutcome r = run_direct_mis(set, verdicts, judge, key, &oracle);
    out.abstained = r.abstained;
    out.answer = r.answer.value_or(kIdk);
    out.chosen = r.selection.chosen;
    for (int idx : r.selection.in_any_maximum)
      if (roles[static_cast<std::size_t>(idx - 1)] == Role::Malicious) out.malicious_in_mis = true;
    for (int idx : r.selection.chosen)
      if (roles[static_cast<std::size_t>(idx - 1)] == Role::Malicious) out.malicious_in_chosen = true;
  } else {
    const auto& sp = std::get<SamplingPipeline>(s.pipeline);
    const SamplingPlan plan{sp.rounds, sp.context_size, s.scheme, key};
    const SamplingOutcome r = run_sampling_mis(set, verdicts, plan, ContextJudge{judge}, oracle);
    out.abstained = r.aggregate.abstained;
    out.answer = r.aggregate.answer;
    out.chosen = r.aggregate.chosen_contexts;
    out.malicious_in_mis = r.aggregate.any_maximum_poisoned;
    out.malicious_in_chosen = !r.aggregate.abstained && !r.aggregate.chosen_clean;
  }
  return out;
}

struct RobustnessEstimate {
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  stats::Proportion malicious_in_mis;
  stats::Proportion malicious_in_chosen;
  stats::Proportion accuracy;  // final answer CORRECT
  stats::Proportion asr;       // final answer ATTACK
  stats::Proportion abstain;

  double p_malicious_in_mis() const { return malicious_in_mis.estimate(); }
  double p_malicious_in_chosen() const { return malicious_in_chosen.estimate(); }
};

/// Runs every trial of `s` on `workers` threads. When `audit` is non-null it
/// receives one outcome per trial, ordered by trial index.
inline RobustnessEstimate run_scenario(const SimScenario& s, int workers = 1,
                                       std::vector<TrialOutcome>* audit = nullptr) {
  s.validate();
  const std::uint64_t hash = fnv1a(s.key());
  const auto n = static_cast<std::uint64_t>(s.trials);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::uint64_t>(n, 256))));
  if (audit) audit->assign(n, {});

  struct Counts {
    std::uint64_t mis = 0, chosen = 0, correct = 0, attack = 0, abstain = 0;
  };
  std::vector<Counts> partial(static_cast<std::size_t>(workers));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      Counts& c = partial[static_cast<std::size_t>(w)];
      for (std::uint64_t t = static_cast<std::uint64_t>(w); t < n; t += static_cast<std::uint64_t>(workers)) {
        TrialOutcome o = run_trial(s, hash, t);
        c.mis += o.malicious_in_mis;
        c.chosen += o.malicious_in_chosen;
        c.correct += o.answer == kCorrect;
        c.attack += o.answer == kAttack;
        c.abstain += o.abstained;
        if (audit) (*audit)[t] = std::move(o);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  Counts total;
  for (const Counts& c : partial) {
    total.mis += c.mis;
    total.chosen += c.chosen;
    total.correct += c.correct;
    total.attack += c.attack;
    total.abstain += c.abstain;
  }
  RobustnessEstimate est;
  est.trials = n;
  est.seed = s.seed;
  est.malicious_in_mis = {total.mis, n};
  est.malicious_in_chosen = {total.chosen, n};
  est.accuracy = {total.correct, n};
  est.asr = {total.attack, n};
  est.abstain = {total.abstain, n};
  return est;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class AttackKind { None, Suffix, Position };

/// Cartesian parameter grid. Empty k_prime means 0..k/2 for each k. For
/// position attacks every entry of `positions` is a single-document attack.
struct SweepGrid {
  std::vector<int> k{10};
  std::vector<int> k_prime;
  std::vector<int> positions;
  std::vector<double> eps1{0.05};
  std::vector<double> eps2{0.2};
  std::vector<double> flip_noise{0.0};
  std::vector<double> irrelevance_rate{0.0};
  std::vector<int> rounds{20};
  std::vector<int> context_size{2};
  std::vector<WeightScheme> schemes{Exponential{0.9}};
  AttackKind attack = AttackKind::Suffix;
  bool sampling = false;
  int trials = 5000;
  std::uint64_t seed = 0;
};

inline std::vector<SimScenario> expand(const SweepGrid& g) {
  std::vector<SimScenario> cells;
  const std::vector<int> no_rounds{0};
  for (int k : g.k) {
    std::vector<int> attacks;
    if (g.attack == AttackKind::Suffix) {
      if (g.k_prime.empty()) {
        for (int kp = 0; kp <= k / 2; ++kp) attacks.push_back(kp);
      } else {
        attacks = g.k_prime;
      }
    } else if (g.attack == AttackKind::Position) {
      attacks = g.positions;
    } else {
      attacks = {0};
    }
    for (int a : attacks)
      for (double e2 : g.eps2)
        for (double e1 : g.eps1)
          for (double flip : g.flip_noise)
            for (double irr : g.irrelevance_rate)
              for (const WeightScheme& scheme : g.schemes)
                for (int t : g.sampling ? g.rounds : no_rounds)
                  for (int m : g.sampling ? g.context_size : no_rounds) {
                    SimScenario s;
                    s.k = k;
                    s.eps1 = e1;
                    s.eps2 = e2;
                    s.flip_noise = flip;
                    s.irrelevance_rate = irr;
                    s.trials = g.trials;
                    s.scheme = scheme;
                    s.seed = g.seed;
                    if (g.attack == AttackKind::Suffix) s.attack = SuffixAttack{a};
                    else if (g.attack == AttackKind::Position) s.attack = RolePlacement{{a}};
                    if (g.sampling) s.pipeline = SamplingPipeline{t, m};
                    cells.push_back(std::move(s));
                  }
  }
  if (cells.empty()) fail(ErrorCode::ConfigError, "sweep grid is empty");
  return cells;
}

/// Runs each cell not listed in `completed` (by key) and hands the estimate to
/// `on_row` as soon as it is available.
inline std::size_t sweep(const std::vector<SimScenario>& cells, int workers,
                         const std::set<std::string>& completed,
                         const std::function<void(const SimScenario&, const RobustnessEstimate&)>& on_row) {
  std::size_t ran = 0;
  for (const SimScenario& cell : cells) {
    if (completed.count(cell.key())) continue;
    on_row(cell, run_scenario(cell, workers));
    ++ran;
  }
  return ran;
}

}  // namespace relrag
