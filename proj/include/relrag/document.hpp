#pragma once

// Retrieved documents, reliability weights, and the pre-graph relevance filter.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "relrag/error.hpp"

namespace relrag {

inline constexpr double kWeightSumTolerance = 1e-9;

/// Simulation ground truth. Selection logic never reads it.
enum class Role { BenignRelevant, Malicious, Irrelevant };

constexpr std::string_view to_string(Role role) {
  switch (role) {
    case Role::BenignRelevant: return "benign_relevant";
    case Role::Malicious: return "malicious";
    case Role::Irrelevant: return "irrelevant";
  }
  return "unknown";
}

inline Role role_from_string(std::string_view s) {
  if (s == "benign_relevant" || s == "benign") return Role::BenignRelevant;
  if (s == "malicious") return Role::Malicious;
  if (s == "irrelevant") return Role::Irrelevant;
  fail(ErrorCode::ConfigError, "unknown role '" + std::string(s) + "'");
}

struct Document {
  int index = 0;  // 1-based retrieval rank, 1 = most reliable
  double weight = 0.0;
  Role role = Role::BenignRelevant;
  std::optional<std::string> payload;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Documents ordered by rank. Indices are strictly increasing; a freshly
/// retrieved set has indices 1..k and weights summing to one, while a filtered
/// set keeps the survivors' original indices and weights.
class RetrievalSet {
 public:
  RetrievalSet() = default;

  explicit RetrievalSet(std::vector<Document> docs) : docs_(std::move(docs)) {
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      if (docs_[i].index < 1)
        fail(ErrorCode::InvalidArgument, "document index must be >= 1");
      if (i > 0 && docs_[i].index <= docs_[i - 1].index)
        fail(ErrorCode::InvalidArgument, "document indices must be strictly increasing");
      if (!(docs_[i].weight >= 0.0) || !std::isfinite(docs_[i].weight))
        fail(ErrorCode::InvalidWeights, "document weight must be finite and non-negative");
    }
  }

  /// Validates the invariants of an unfiltered retrieval: indices 1..k, weights
  /// a probability vector that is non-increasing in rank.
  static RetrievalSet fresh(std::vector<Document> docs) {
    RetrievalSet set(std::move(docs));
    double sum = 0.0;
    for (std::size_t i = 0; i < set.docs_.size(); ++i) {
      const Document& d = set.docs_[i];
      if (d.index != static_cast<int>(i) + 1)
        fail(ErrorCode::InvalidArgument, "fresh retrieval indices must be 1..k without gaps");
      if (i > 0 && d.weight > set.docs_[i - 1].weight)
        fail(ErrorCode::InvalidWeights, "weights must be non-increasing in rank");
      sum += d.weight;
    }
    if (!set.docs_.empty() && std::abs(sum - 1.0) > kWeightSumTolerance)
      fail(ErrorCode::InvalidWeights, "weights must sum to 1");
    return set;
  }

  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }
  int k() const noexcept { return static_cast<int>(docs_.size()); }
  const Document& operator[](std::size_t i) const { return docs_[i]; }
  auto begin() const noexcept { return docs_.begin(); }
  auto end() const noexcept { return docs_.end(); }

  int k_prime() const noexcept {
    return static_cast<int>(std::count_if(docs_.begin(), docs_.end(),
                                          [](const Document& d) { return d.role == Role::Malicious; }));
  }

  /// Position of the document carrying `index`, if present.
  std::optional<std::size_t> position_of(int index) const {
    auto it = std::lower_bound(docs_.begin(), docs_.end(), index,
                               [](const Document& d, int v) { return d.index < v; });
    if (it == docs_.end() || it->index != index) return std::nullopt;
    return static_cast<std::size_t>(it - docs_.begin());
  }

  double total_weight() const noexcept {
    double s = 0.0;
    for (const Document& d : docs_) s += d.weight;
    return s;
  }

  /// Total weight of malicious documents after renormalization (eta).
  double malicious_weight() const noexcept {
    const double total = total_weight();
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (const Document& d : docs_)
      if (d.role == Role::Malicious) s += d.weight;
    return s / total;
  }

  friend bool operator==(const RetrievalSet&, const RetrievalSet&) = default;

 private:
  std::vector<Document> docs_;
};

// ---------------------------------------------------------------------------
// Weight schemes

struct Exponential {
  double gamma = 0.9;  // w(x_i) proportional to gamma^(i-1)
};
struct Linear {};  // w(x_i) proportional to 1 - i/k; the last document gets zero
struct Uniform {};
struct Explicit {
  std::vector<double> scores;  // raw reliability scores r(x_i)
};

using WeightScheme = std::variant<Exponential, Linear, Uniform, Explicit>;

inline std::string describe(const WeightScheme& scheme) {
  struct {
    std::string operator()(const Exponential& e) const {
      char buf[64];
      std::snprintf(buf, sizeof buf, "exponential:%.17g", e.gamma);
      return buf;
    }
    std::string operator()(const Linear&) const { return "linear"; }
    std::string operator()(const Uniform&) const { return "uniform"; }
    std::string operator()(const Explicit& e) const {
      std::string s = "explicit:";
      for (std::size_t i = 0; i < e.scores.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%.17g", i ? "|" : "", e.scores[i]);
        s += buf;
      }
      return s;
    }
  } visitor;
  return std::visit(visitor, scheme);
}

/// Normalized weights for a retrieval of size k.
inline std::vector<double> make_weights(const WeightScheme& scheme, int k) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<double> raw(static_cast<std::size_t>(k));
  if (const auto* e = std::get_if<Exponential>(&scheme)) {
    if (!(e->gamma > 0.0 && e->gamma < 1.0))
      fail(ErrorCode::InvalidWeights, "exponential decay requires gamma in (0,1)");
    double w = 1.0;
    for (auto& r : raw) {
      r = w;
      w *= e->gamma;
    }
  } else if (std::holds_alternative<Linear>(scheme)) {
    for (int i = 1; i <= k; ++i) raw[static_cast<std::size_t>(i - 1)] = 1.0 - static_cast<double>(i) / k;
  } else if (std::holds_alternative<Uniform>(scheme)) {
    std::fill(raw.begin(), raw.end(), 1.0);
  } else {
    const auto& scores = std::get<Explicit>(scheme).scores;
    if (scores.size() != raw.size())
      fail(ErrorCode::InvalidWeights, "explicit scores must have length k");
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (!(scores[i] >= 0.0) || !std::isfinite(scores[i]))
        fail(ErrorCode::InvalidWeights, "explicit scores must be finite and non-negative");
      if (i > 0 && scores[i] > scores[i - 1])
        fail(ErrorCode::InvalidWeights, "explicit scores must be non-increasing in rank");
    }
    raw = scores;
  }
  double total = 0.0;
  for (double r : raw) total += r;
  if (!(total > 0.0)) fail(ErrorCode::InvalidWeights, "weight scheme has zero total score");
  for (auto& r : raw) r /= total;
  return raw;
}

/// A fresh retrieval set of size roles.size() with weights from `scheme`.
inline RetrievalSet make_retrieval_set(const std::vector<Role>& roles, const WeightScheme& scheme) {
  const auto weights = make_weights(scheme, static_cast<int>(roles.size()));
  std::vector<Document> docs;
  docs.reserve(roles.size());
  for (std::size_t i = 0; i < roles.size(); ++i)
    docs.push_back({static_cast<int>(i) + 1, weights[i], roles[i], std::nullopt});
  return RetrievalSet(std::move(docs));
}

/// Copy of `set` with weights rescaled to sum to one.
inline RetrievalSet renormalized(const RetrievalSet& set) {
  const double total = set.total_weight();
  if (!(total > 0.0)) fail(ErrorCode::InvalidWeights, "all document weights are zero");
  std::vector<Document> docs = set.documents();
  for (auto& d : docs) d.weight /= total;
  return RetrievalSet(std::move(docs));
}

// ---------------------------------------------------------------------------
// Relevance filter

enum class Verdict { Keep, Drop };

/// Removes documents judged irrelevant. Survivors keep index, role and weight.
inline RetrievalSet relevance_filter(const RetrievalSet& set, const std::vector<Verdict>& verdicts) {
  if (verdicts.size() != set.size())
    fail(ErrorCode::InvalidArgument, "relevance_filter needs one verdict per document");
  std::vector<Document> kept;
  kept.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    if (verdicts[i] == Verdict::Keep) kept.push_back(set[i]);
  if (kept.empty() && !set.empty())
    fail(ErrorCode::EmptyAfterFilter, "every document was judged irrelevant");
  return RetrievalSet(std::move(kept));
}

/// Simulated relevance judge: Irrelevant documents are always dropped.
inline std::vector<Verdict> simulated_verdicts(const RetrievalSet& set) {
  std::vector<Verdict> out;
  out.reserve(set.size());
  for (const Document& d : set)
    out.push_back(d.role == Role::Irrelevant ? Verdict::Drop : Verdict::Keep);
  return out;
}

}  // namespace relrag
