#pragma once

// Answer oracles stand in for the language model. The simulated oracle answers
// from role ground truth; the trace oracle replays tokens recorded offline.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relrag/document.hpp"
#include "relrag/error.hpp"

namespace relrag {

using Token = std::string;

inline const Token kCorrect = "CORRECT";
inline const Token kAttack = "ATTACK";
inline const Token kIdk = "IDK";

/// Simulated answer: ATTACK if any malicious input is present (worst-case
/// attacker), CORRECT if at least one benign-relevant input and no malicious
/// one, IDK when there is nothing relevant to answer from.
inline Token answer_oracle(std::span<const Role> inputs) {
  bool relevant = false;
  for (Role r : inputs) {
    if (r == Role::Malicious) return kAttack;
    if (r == Role::BenignRelevant) relevant = true;
  }
  return relevant ? kCorrect : kIdk;
}

/// "1,2,5" for an ascending index list.
inline std::string join_key(std::span<const int> indices) {
  std::string key;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) key += ',';
    key += std::to_string(indices[i]);
  }
  return key;
}

class AnswerOracle {
 public:
  virtual ~AnswerOracle() = default;
  /// Answer from one document on its own.
  virtual Token isolated(const Document& doc) const = 0;
  /// Answer from a sampled context; `draws` is the ascending multiset of ranks.
  virtual Token context(std::span<const int> draws, const RetrievalSet& set) const = 0;
  /// Final answer from the selected documents in rank order.
  virtual Token final_answer(std::span<const Document> docs) const = 0;
};

class SimulatedOracle final : public AnswerOracle {
 public:
  Token isolated(const Document& doc) const override {
    const Role r = doc.role;
    return answer_oracle(std::span<const Role>(&r, 1));
  }
  Token context(std::span<const int> draws, const RetrievalSet& set) const override {
    std::vector<Role> roles;
    roles.reserve(draws.size());
    for (int idx : draws) {
      const auto pos = set.position_of(idx);
      if (!pos) fail(ErrorCode::InvalidArgument, "context draws unknown document " + std::to_string(idx));
      roles.push_back(set[*pos].role);
    }
    return answer_oracle(roles);
  }
  Token final_answer(std::span<const Document> docs) const override {
    std::vector<Role> roles;
    roles.reserve(docs.size());
    for (const Document& d : docs) roles.push_back(d.role);
    return answer_oracle(roles);
  }
};

/// Tokens produced offline by a real model.
struct AnswerTrace {
  std::map<int, Token> isolated_answers;            // by document index
  std::map<std::string, Token> context_answers;     // by context key, e.g. "1,3"
  std::optional<std::map<std::string, Token>> final_answers;  // by selected-set key
  std::map<std::pair<Token, Token>, double> answer_contradictions;  // optional, canonical (a <= b)
};

class TraceOracle final : public AnswerOracle {
 public:
  explicit TraceOracle(AnswerTrace trace) : trace_(std::move(trace)) {}

  Token isolated(const Document& doc) const override {
    auto it = trace_.isolated_answers.find(doc.index);
    if (it == trace_.isolated_answers.end())
      fail(ErrorCode::TraceIncomplete, "no isolated answer for document " + std::to_string(doc.index));
    return it->second;
  }
  Token context(std::span<const int> draws, const RetrievalSet&) const override {
    const std::string key = join_key(draws);
    auto it = trace_.context_answers.find(key);
    if (it == trace_.context_answers.end())
      fail(ErrorCode::TraceIncomplete, "no answer recorded for context " + key);
    return it->second;
  }
  Token final_answer(std::span<const Document> docs) const override {
    std::vector<int> idx;
    for (const Document& d : docs) idx.push_back(d.index);
    const std::string key = join_key(idx);
    if (!trace_.final_answers)
      fail(ErrorCode::TraceIncomplete, "trace records no final answers");
    auto it = trace_.final_answers->find(key);
    if (it == trace_.final_answers->end())
      fail(ErrorCode::TraceIncomplete, "no final answer recorded for selection " + key);
    return it->second;
  }

  bool has_final_answers() const noexcept { return trace_.final_answers.has_value(); }
  const AnswerTrace& trace() const noexcept { return trace_; }

 private:
  AnswerTrace trace_;
};

}  // namespace relrag
