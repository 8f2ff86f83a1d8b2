#pragma once

// Exact maximum independent set with rank-aware lexicographic tie-breaking.
//
// Among all independent sets of maximum size we return the one whose
// ascending label sequence is lexicographically smallest, i.e. the one that
// keeps the highest-ranked documents. The search is a depth-first branch and
// bound over 64-bit vertex masks that branches on vertices in rank order,
// trying "include" before "exclude". That visiting order is exactly the
// lexicographic order on sets, so the first maximum set reached is the answer.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "relrag/error.hpp"
#include "relrag/graph.hpp"

namespace relrag {

inline constexpr int kMisVertexCap = 30;
inline constexpr int kOracleVertexCap = 20;

/// Rank key of a set: its labels sorted ascending. Keys compare element-wise.
using LexKey = std::vector<int>;

inline LexKey lex_key(std::vector<int> labels) {
  std::sort(labels.begin(), labels.end());
  return labels;
}

struct SelectOptions {
  /// Enumerate every maximum set (needed for all_maximum and in_any_maximum).
  bool enumerate_all = true;
  /// Materialize at most this many maximum sets in all_maximum.
  std::size_t max_sets = 1024;
};

struct SelectionResult {
  std::vector<int> chosen;                     // ascending labels
  std::vector<std::vector<int>> all_maximum;   // lexicographic order, capped
  std::size_t maximum_count = 0;               // exact count (0 if not enumerated)
  bool all_maximum_truncated = false;
  std::vector<int> in_any_maximum;             // union of all maximum sets
  std::size_t size = 0;
  LexKey key;

  VertexMask chosen_mask = 0;
  VertexMask union_mask = 0;
};

namespace detail {

class MisSearch {
 public:
  MisSearch(const ContradictionGraph& g, const SelectOptions& opts)
      : adj_(g.adjacency()), opts_(opts) {}

  void run(int n) {
    const VertexMask all = n == 64 ? ~VertexMask{0} : bit(n) - 1;
    expand(0, 0, all);
  }

  VertexMask best = 0;
  int best_size = -1;
  std::vector<VertexMask> maxima;
  std::size_t count = 0;
  VertexMask union_mask = 0;

 private:
  // Greedy clique cover of `cand`: an independent set meets each clique at most once.
  int clique_cover(VertexMask cand) const noexcept {
    int cliques = 0;
    while (cand) {
      const int v = std::countr_zero(cand);
      cand &= cand - 1;
      VertexMask grow = adj_[static_cast<std::size_t>(v)] & cand;
      while (grow) {
        const int u = std::countr_zero(grow);
        cand &= ~bit(u);
        grow &= adj_[static_cast<std::size_t>(u)];
        grow &= ~bit(u);
      }
      ++cliques;
    }
    return cliques;
  }

  bool pruned(int size, VertexMask cand) const noexcept {
    // Enumeration keeps ties; the lex-first search only needs strict gains.
    const int need = opts_.enumerate_all ? best_size : best_size + 1;
    if (size + std::popcount(cand) < need) return true;
    return size + clique_cover(cand) < need;
  }

  void leaf(VertexMask chosen, int size) {
    if (size > best_size) {
      best_size = size;
      best = chosen;
      maxima.clear();
      count = 0;
      union_mask = 0;
    }
    if (size == best_size && opts_.enumerate_all) {
      ++count;
      union_mask |= chosen;
      if (maxima.size() < opts_.max_sets) maxima.push_back(chosen);
    }
  }

  void expand(VertexMask chosen, int size, VertexMask cand) {
    if (!cand) {
      leaf(chosen, size);
      return;
    }
    if (pruned(size, cand)) return;
    const int v = std::countr_zero(cand);
    const VertexMask nv = adj_[static_cast<std::size_t>(v)];
    expand(chosen | bit(v), size + 1, cand & ~nv & ~bit(v));
    // A vertex with no remaining neighbours belongs to every maximum set below.
    if (nv & cand) expand(chosen, size, cand & ~bit(v));
  }

  const std::vector<VertexMask>& adj_;
  SelectOptions opts_;
};

inline SelectionResult finish(const ContradictionGraph& g, VertexMask best, std::vector<VertexMask> maxima,
                              std::size_t count, VertexMask union_mask, bool enumerated) {
  SelectionResult r;
  r.chosen_mask = best;
  r.chosen = g.labels_of(best);
  r.size = r.chosen.size();
  r.key = lex_key(r.chosen);
  if (enumerated) {
    r.maximum_count = count;
    r.all_maximum_truncated = maxima.size() < count;
    r.all_maximum.reserve(maxima.size());
    for (VertexMask m : maxima) r.all_maximum.push_back(g.labels_of(m));
    r.union_mask = union_mask;
    r.in_any_maximum = g.labels_of(union_mask);
  } else {
    r.maximum_count = 0;
    r.all_maximum = {r.chosen};
    r.all_maximum_truncated = true;
    r.union_mask = best;
    r.in_any_maximum = r.chosen;
  }
  return r;
}

}  // namespace detail

/// Rank-aware exact maximum independent set. An empty graph yields an empty
/// selection (the caller abstains).
inline SelectionResult select_mis(const ContradictionGraph& graph, const SelectOptions& opts = {}) {
  const int n = graph.size();
  if (n > kMisVertexCap)
    fail(ErrorCode::GraphTooLarge, "select_mis supports at most " + std::to_string(kMisVertexCap) +
                                       " vertices, got " + std::to_string(n));
  if (n == 0) {
    SelectionResult empty;
    if (opts.enumerate_all) {
      empty.maximum_count = 1;
      empty.all_maximum = {{}};
    }
    return empty;
  }
  detail::MisSearch search(graph, opts);
  search.run(n);
  SelectionResult r = detail::finish(graph, search.best, std::move(search.maxima), search.count,
                                     search.union_mask, opts.enumerate_all);
  if (!graph.is_independent(r.chosen_mask))
    fail(ErrorCode::InvalidArgument, "internal error: selected set is not independent");
  return r;
}

/// Reference enumeration of all 2^n subsets with no pruning. Used to check
/// select_mis; same contract, n <= 20.
inline SelectionResult mis_oracle(const ContradictionGraph& graph, std::size_t max_sets = 1024) {
  const int n = graph.size();
  if (n > kOracleVertexCap)
    fail(ErrorCode::GraphTooLarge, "mis_oracle supports at most " + std::to_string(kOracleVertexCap) +
                                       " vertices, got " + std::to_string(n));
  const auto& adj = graph.adjacency();
  std::size_t best_size = 0;
  LexKey best_key;
  VertexMask best = 0;
  std::vector<LexKey> maxima;
  std::size_t count = 0;
  VertexMask union_mask = 0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    bool independent = true;
    for (int v = 0; v < n && independent; ++v)
      if (((s >> v) & 1U) && (adj[static_cast<std::size_t>(v)] & s)) independent = false;
    if (!independent) continue;
    LexKey key = lex_key(graph.labels_of(s));
    if (count == 0 || key.size() > best_size) {
      best_size = key.size();
      best_key = key;
      best = s;
      maxima.clear();
      count = 0;
      union_mask = 0;
    } else if (key.size() < best_size) {
      continue;
    } else if (key < best_key) {
      best_key = key;
      best = s;
    }
    ++count;
    union_mask |= s;
    maxima.push_back(std::move(key));
  }
  std::sort(maxima.begin(), maxima.end());
  SelectionResult r;
  r.chosen_mask = best;
  r.chosen = best_key;
  r.size = best_key.size();
  r.key = best_key;
  r.maximum_count = count;
  r.all_maximum_truncated = maxima.size() > max_sets;
  if (maxima.size() > max_sets) maxima.resize(max_sets);
  r.all_maximum = std::move(maxima);
  r.union_mask = union_mask;
  r.in_any_maximum = graph.labels_of(union_mask);
  return r;
}

}  // namespace relrag
