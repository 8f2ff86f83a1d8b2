#pragma once

// Pairwise contradiction judgments and contradiction-graph construction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "relrag/document.hpp"
#include "relrag/error.hpp"
#include "relrag/graph.hpp"
#include "relrag/rng.hpp"

namespace relrag {

/// Error model for an imperfect NLI judge.
///   benign/benign       -> edge with probability eps1
///   benign/malicious    -> edge with probability 1 - eps2
///   malicious/malicious -> never an edge (adversarial worst case)
/// Each resulting decision is then inverted with probability flip_noise.
/// Irrelevant documents are judged as benign if they reach the graph.
struct StochasticJudge {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double flip_noise = 0.0;
};

/// Recorded contradiction probabilities, keyed by label pair.
class TraceMatrix {
 public:
  TraceMatrix() = default;
  explicit TraceMatrix(int k, std::optional<double> default_p = std::nullopt)
      : k_(k), default_p_(default_p),
        p_(static_cast<std::size_t>(k) * static_cast<std::size_t>(k),
           std::numeric_limits<double>::quiet_NaN()) {
    if (k < 0) fail(ErrorCode::TraceInvalid, "trace k must be non-negative");
    if (default_p && !(*default_p >= 0.0 && *default_p <= 1.0))
      fail(ErrorCode::TraceInvalid, "default probability outside [0,1]");
  }

  int k() const noexcept { return k_; }
  std::optional<double> default_probability() const noexcept { return default_p_; }

  /// Records p for the unordered pair {i, j} (1-based labels). A second record
  /// for the same pair must agree, otherwise the matrix is asymmetric.
  void set(int i, int j, double p) {
    check_pair(i, j);
    if (!(p >= 0.0 && p <= 1.0))
      fail(ErrorCode::TraceInvalid, "probability outside [0,1] for pair (" + std::to_string(i) +
                                        "," + std::to_string(j) + ")");
    double& a = at(i, j);
    double& b = at(j, i);
    if (!std::isnan(a) && a != p)
      fail(ErrorCode::TraceInvalid, "asymmetric trace: p(" + std::to_string(i) + "," +
                                        std::to_string(j) + ") recorded twice with different values");
    a = p;
    b = p;
  }

  bool has(int i, int j) const {
    check_pair(i, j);
    return !std::isnan(at(i, j));
  }

  double get(int i, int j) const {
    check_pair(i, j);
    const double p = at(i, j);
    if (!std::isnan(p)) return p;
    if (default_p_) return *default_p_;
    fail(ErrorCode::TraceIncomplete, "trace matrix has no entry for pair (" + std::to_string(std::min(i, j)) +
                                         "," + std::to_string(std::max(i, j)) + ")");
  }

  int recorded_pairs() const noexcept {
    int n = 0;
    for (int i = 1; i <= k_; ++i)
      for (int j = i + 1; j <= k_; ++j)
        if (!std::isnan(at(i, j))) ++n;
    return n;
  }

 private:
  void check_pair(int i, int j) const {
    if (i < 1 || j < 1 || i > k_ || j > k_ || i == j)
      fail(ErrorCode::TraceInvalid, "pair (" + std::to_string(i) + "," + std::to_string(j) +
                                        ") outside 1.." + std::to_string(k_));
  }
  double& at(int i, int j) { return p_[static_cast<std::size_t>((i - 1) * k_ + (j - 1))]; }
  double at(int i, int j) const { return p_[static_cast<std::size_t>((i - 1) * k_ + (j - 1))]; }

  int k_ = 0;
  std::optional<double> default_p_;
  std::vector<double> p_;
};

struct JudgeModel {
  std::variant<StochasticJudge, TraceMatrix> kind = StochasticJudge{};
  double beta = 0.5;  // contradiction threshold; edge iff p >= beta

  static JudgeModel stochastic(double eps1, double eps2, double flip_noise = 0.0, double beta = 0.5) {
    JudgeModel m{StochasticJudge{eps1, eps2, flip_noise}, beta};
    m.validate();
    return m;
  }
  static JudgeModel trace(TraceMatrix matrix, double beta = 0.5) {
    JudgeModel m{std::move(matrix), beta};
    m.validate();
    return m;
  }

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) fail(ErrorCode::InvalidArgument, "beta must lie in (0,1)");
    if (const auto* s = std::get_if<StochasticJudge>(&kind)) {
      for (double e : {s->eps1, s->eps2, s->flip_noise})
        if (!(e >= 0.0 && e <= 1.0))
          fail(ErrorCode::InvalidArgument, "judge error rates must lie in [0,1]");
    }
  }
};

struct JudgmentRecord {
  int i = 0;  // i < j
  int j = 0;
  double probability = 0.0;
  bool is_edge = false;
  Role role_i = Role::BenignRelevant;
  Role role_j = Role::BenignRelevant;

  friend bool operator==(const JudgmentRecord&, const JudgmentRecord&) = default;
};

/// Judges one pair. `key` identifies the trial; the pair's substream is keyed by
/// (key, min index, max index) so argument order never matters.
inline JudgmentRecord judge_pair(const JudgeModel& model, const Document& a, const Document& b,
                                 std::uint64_t key) {
  const Document& lo = a.index <= b.index ? a : b;
  const Document& hi = a.index <= b.index ? b : a;
  JudgmentRecord rec{lo.index, hi.index, 0.0, false, lo.role, hi.role};

  if (const auto* s = std::get_if<StochasticJudge>(&model.kind)) {
    rng::Stream stream(rng::derive(key, {rng::kTagJudge, static_cast<std::uint64_t>(lo.index),
                                         static_cast<std::uint64_t>(hi.index)}));
    const bool mal_lo = lo.role == Role::Malicious;
    const bool mal_hi = hi.role == Role::Malicious;
    double edge_rate = 0.0;
    if (!mal_lo && !mal_hi) edge_rate = s->eps1;
    else if (mal_lo != mal_hi) edge_rate = 1.0 - s->eps2;
    bool edge = stream.bernoulli(edge_rate);
    if (stream.bernoulli(s->flip_noise)) edge = !edge;
    rec.probability = edge ? 1.0 : 0.0;
  } else {
    rec.probability = std::get<TraceMatrix>(model.kind).get(lo.index, hi.index);
  }
  rec.is_edge = rec.probability >= model.beta;
  return rec;
}

struct JudgedGraph {
  ContradictionGraph graph;
  std::vector<JudgmentRecord> judgments;  // one per unordered pair, (i, j) lexicographic
};

/// Builds the contradiction graph over the documents of `set`, judging every
/// unordered pair exactly once.
inline JudgedGraph build_graph(const RetrievalSet& set, const JudgeModel& model, std::uint64_t key) {
  std::vector<int> labels;
  labels.reserve(set.size());
  for (const Document& d : set) labels.push_back(d.index);
  JudgedGraph out{ContradictionGraph(std::move(labels)), {}};
  const int n = set.k();
  out.judgments.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      JudgmentRecord rec = judge_pair(model, set[static_cast<std::size_t>(u)],
                                      set[static_cast<std::size_t>(v)], key);
      if (rec.is_edge) out.graph.add_edge(u, v);
      out.judgments.push_back(rec);
    }
  }
  return out;
}

}  // namespace relrag
