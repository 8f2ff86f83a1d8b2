#pragma once

// Weighted sample-and-aggregate with the MIS aggregator.
//
// Each round draws a context of m documents with replacement, weight
// proportional to reliability, and asks the oracle for an intermediate
// answer. The aggregator treats contexts as pseudo-documents ranked by their
// sorted draw sequence, runs rank-aware MIS selection over contradictions
// between intermediate answers, and answers from the union of the chosen
// contexts' documents.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "relrag/document.hpp"
#include "relrag/error.hpp"
#include "relrag/judge.hpp"
#include "relrag/mis.hpp"
#include "relrag/oracle.hpp"
#include "relrag/rng.hpp"

namespace relrag {

struct SamplingPlan {
  int rounds = 20;       // T
  int context_size = 2;  // m
  WeightScheme scheme = Exponential{0.9};
  std::uint64_t seed = 0;

  void validate() const {
    if (rounds < 1) fail(ErrorCode::InvalidArgument, "sampling needs at least one round");
    if (context_size < 1) fail(ErrorCode::InvalidArgument, "context size must be >= 1");
  }
};

struct Context {
  int round = 0;                 // 1..T
  std::vector<int> draws;        // in draw order, duplicates kept
  std::vector<double> weights;   // W_t, aligned with draws
  std::vector<int> rank_key;     // draws sorted ascending
  bool clean = true;             // no malicious draw (simulation provenance)

  std::string key() const { return join_key(rank_key); }
  friend bool operator==(const Context&, const Context&) = default;
};

/// T contexts of m independent draws from the renormalized weights of `set`.
/// Round t uses its own substream keyed by (plan.seed, t).
inline std::vector<Context> sample_contexts(const RetrievalSet& set, const SamplingPlan& plan) {
  plan.validate();
  if (set.empty()) fail(ErrorCode::EmptyAfterFilter, "cannot sample from an empty retrieval set");
  std::vector<double> cumulative(set.size());
  double running = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) cumulative[i] = running += set[i].weight;
  if (!(running > 0.0)) fail(ErrorCode::InvalidWeights, "all document weights are zero");

  std::vector<Context> out;
  out.reserve(static_cast<std::size_t>(plan.rounds));
  for (int t = 1; t <= plan.rounds; ++t) {
    rng::Stream stream(rng::derive(plan.seed, {rng::kTagSample, static_cast<std::uint64_t>(t)}));
    Context ctx;
    ctx.round = t;
    ctx.draws.reserve(static_cast<std::size_t>(plan.context_size));
    for (int d = 0; d < plan.context_size; ++d) {
      const Document& doc = set[stream.categorical(cumulative)];
      ctx.draws.push_back(doc.index);
      ctx.weights.push_back(doc.weight / running);
      if (doc.role == Role::Malicious) ctx.clean = false;
    }
    ctx.rank_key = ctx.draws;
    std::sort(ctx.rank_key.begin(), ctx.rank_key.end());
    out.push_back(std::move(ctx));
  }
  return out;
}

/// Strict weak order on contexts: rank keys element-wise, then round.
inline bool context_ranks_before(const Context& a, const Context& b) {
  if (a.rank_key != b.rank_key) return a.rank_key < b.rank_key;
  return a.round < b.round;
}

inline std::vector<Context> rank_contexts(std::vector<Context> contexts) {
  std::sort(contexts.begin(), contexts.end(), context_ranks_before);
  return contexts;
}

/// Trace-mode contradiction between intermediate answers: a recorded
/// probability for the token pair if present, else 1 when the tokens differ
/// and 0 when they match.
struct AnswerAgreement {
  std::map<std::pair<Token, Token>, double> recorded;  // canonical (a <= b)

  double probability(const Token& a, const Token& b) const {
    auto key = a <= b ? std::pair{a, b} : std::pair{b, a};
    if (auto it = recorded.find(key); it != recorded.end()) return it->second;
    return a == b ? 0.0 : 1.0;
  }
};

/// How contexts are judged against each other. A JudgeModel's trace matrix is
/// indexed by rank position among the answering contexts.
using ContextJudge = std::variant<JudgeModel, AnswerAgreement>;

struct AggregateAnswer {
  Token answer;
  bool abstained = false;
  std::vector<int> chosen_contexts;   // round numbers, ascending
  std::vector<Token> provenance;      // intermediate answer per round (index t-1)
  std::vector<int> ranked_rounds;     // graph vertex v -> round, answering contexts only
  JudgedGraph judged;                 // vertices labelled by rank position 1..n
  SelectionResult selection;
  std::vector<Document> final_documents;  // union of chosen contexts, rank order
  bool chosen_clean = true;           // no chosen context contains a malicious draw
  bool any_maximum_poisoned = false;  // some maximum set holds a poisoned context
};

/// MIS aggregator. `answers[i]` is the intermediate answer for `contexts[i]`.
/// Contexts that answered IDK take no part; if none remain the result abstains.
inline AggregateAnswer aggregate_mis(const RetrievalSet& set, const std::vector<Context>& contexts,
                                     const std::vector<Token>& answers, const ContextJudge& judge,
                                     std::uint64_t key, const AnswerOracle& oracle,
                                     const SelectOptions& opts = {}) {
  if (contexts.size() != answers.size())
    fail(ErrorCode::InvalidArgument, "aggregate_mis needs one answer per context");

  AggregateAnswer out;
  std::vector<std::pair<Context, Token>> ranked;
  ranked.reserve(contexts.size());
  int max_round = 0;
  for (std::size_t i = 0; i < contexts.size(); ++i) max_round = std::max(max_round, contexts[i].round);
  out.provenance.assign(static_cast<std::size_t>(max_round), kIdk);
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    out.provenance[static_cast<std::size_t>(contexts[i].round - 1)] = answers[i];
    if (answers[i] != kIdk) ranked.emplace_back(contexts[i], answers[i]);
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) { return context_ranks_before(a.first, b.first); });

  if (ranked.empty()) {
    out.answer = kIdk;
    out.abstained = true;
    out.selection = select_mis(ContradictionGraph{}, opts);
    return out;
  }
  const int n = static_cast<int>(ranked.size());
  if (n > kMisVertexCap)
    fail(ErrorCode::GraphTooLarge, "MIS aggregation supports at most " + std::to_string(kMisVertexCap) +
                                       " answering contexts, got " + std::to_string(n));

  // Contexts become pseudo-documents labelled by rank position; a poisoned
  // context plays the malicious role for the stochastic judge.
  std::vector<Document> pseudo;
  pseudo.reserve(ranked.size());
  for (int v = 0; v < n; ++v) {
    const auto& [ctx, token] = ranked[static_cast<std::size_t>(v)];
    out.ranked_rounds.push_back(ctx.round);
    pseudo.push_back({v + 1, 0.0, ctx.clean ? Role::BenignRelevant : Role::Malicious, token});
  }
  const RetrievalSet vertices(std::move(pseudo));
  const std::uint64_t judge_key = rng::derive(key, {rng::kTagAggregate});
  if (const auto* model = std::get_if<JudgeModel>(&judge)) {
    out.judged = build_graph(vertices, *model, judge_key);
  } else {
    const auto& agreement = std::get<AnswerAgreement>(judge);
    TraceMatrix matrix(n);
    for (int a = 1; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b)
        matrix.set(a, b, agreement.probability(ranked[static_cast<std::size_t>(a - 1)].second,
                                               ranked[static_cast<std::size_t>(b - 1)].second));
    out.judged = build_graph(vertices, JudgeModel::trace(std::move(matrix)), judge_key);
  }
  out.selection = select_mis(out.judged.graph, opts);

  std::vector<int> docs;
  for (int label : out.selection.chosen) {
    const Context& ctx = ranked[static_cast<std::size_t>(label - 1)].first;
    out.chosen_contexts.push_back(ctx.round);
    if (!ctx.clean) out.chosen_clean = false;
    docs.insert(docs.end(), ctx.draws.begin(), ctx.draws.end());
  }
  for (int label : out.selection.in_any_maximum)
    if (!ranked[static_cast<std::size_t>(label - 1)].first.clean) out.any_maximum_poisoned = true;
  std::sort(out.chosen_contexts.begin(), out.chosen_contexts.end());
  std::sort(docs.begin(), docs.end());
  docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  for (int idx : docs) {
    const auto pos = set.position_of(idx);
    if (!pos) fail(ErrorCode::InvalidArgument, "context draws unknown document " + std::to_string(idx));
    out.final_documents.push_back(set[*pos]);
  }
  out.answer = oracle.final_answer(out.final_documents);
  return out;
}

struct SamplingOutcome {
  RetrievalSet filtered;  // renormalized survivors
  std::vector<Context> contexts;
  std::vector<Token> answers;
  AggregateAnswer aggregate;
};

/// Full sampling pipeline: relevance filter, renormalize, sample, answer each
/// context, aggregate. Abstains when nothing survives the filter.
inline SamplingOutcome run_sampling_mis(const RetrievalSet& set, const std::vector<Verdict>& verdicts,
                                        const SamplingPlan& plan, const ContextJudge& judge,
                                        const AnswerOracle& oracle, const SelectOptions& opts = {}) {
  SamplingOutcome out;
  try {
    out.filtered = renormalized(relevance_filter(set, verdicts));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyAfterFilter) throw;
    out.aggregate.answer = kIdk;
    out.aggregate.abstained = true;
    return out;
  }
  out.contexts = sample_contexts(out.filtered, plan);
  out.answers.reserve(out.contexts.size());
  for (const Context& ctx : out.contexts) out.answers.push_back(oracle.context(ctx.rank_key, out.filtered));
  out.aggregate = aggregate_mis(out.filtered, out.contexts, out.answers, judge, plan.seed, oracle, opts);
  return out;
}

}  // namespace relrag
