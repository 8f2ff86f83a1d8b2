#pragma once

// Rank-aware selection over a retrieval set: relevance filter, contradiction
// graph, maximum independent set, final answer.

#include <cstdint>
#include <optional>
#include <vector>

#include "relrag/document.hpp"
#include "relrag/judge.hpp"
#include "relrag/mis.hpp"
#include "relrag/oracle.hpp"

namespace relrag {

struct DirectOutcome {
  RetrievalSet filtered;
  JudgedGraph judged;
  SelectionResult selection;
  std::vector<Document> selected;  // chosen documents in rank order
  std::optional<Token> answer;     // absent when no oracle was supplied
  bool abstained = false;
};

/// Runs selection on `set`. Abstains (answer IDK, empty selection) when every
/// document is filtered out. `oracle` may be null to skip final answering.
inline DirectOutcome run_direct_mis(const RetrievalSet& set, const std::vector<Verdict>& verdicts,
                                    const JudgeModel& judge, std::uint64_t key,
                                    const AnswerOracle* oracle, const SelectOptions& opts = {}) {
  DirectOutcome out;
  try {
    out.filtered = relevance_filter(set, verdicts);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyAfterFilter) throw;
    out.abstained = true;
  }
  if (out.filtered.empty()) {
    out.abstained = true;
    out.selection = select_mis(ContradictionGraph{}, opts);
    out.answer = kIdk;
    return out;
  }
  if (out.filtered.k() > kMisVertexCap)
    fail(ErrorCode::GraphTooLarge, "direct selection supports at most " + std::to_string(kMisVertexCap) +
                                       " documents after filtering; use the sampling pipeline");
  out.judged = build_graph(out.filtered, judge, key);
  out.selection = select_mis(out.judged.graph, opts);
  for (int idx : out.selection.chosen) out.selected.push_back(out.filtered[*out.filtered.position_of(idx)]);
  if (oracle) out.answer = oracle->final_answer(out.selected);
  return out;
}

}  // namespace relrag
