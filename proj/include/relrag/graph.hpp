#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relrag/error.hpp"

namespace relrag {

using VertexMask = std::uint64_t;

inline constexpr int kMaxGraphVertices = 64;

inline constexpr VertexMask bit(int v) noexcept { return VertexMask{1} << v; }

/// Undirected graph over at most 64 vertices. Vertex v carries the document
/// (or context) label labels()[v]; labels are strictly increasing so vertex
/// order is rank order.
class ContradictionGraph {
 public:
  ContradictionGraph() = default;

  explicit ContradictionGraph(std::vector<int> labels) : labels_(std::move(labels)) {
    if (labels_.size() > static_cast<std::size_t>(kMaxGraphVertices))
      fail(ErrorCode::GraphTooLarge,
           "contradiction graph holds at most " + std::to_string(kMaxGraphVertices) + " vertices");
    for (std::size_t i = 1; i < labels_.size(); ++i)
      if (labels_[i] <= labels_[i - 1])
        fail(ErrorCode::InvalidArgument, "graph labels must be strictly increasing");
    adjacency_.assign(labels_.size(), 0);
  }

  /// Graph on labels 1..n.
  static ContradictionGraph with_vertices(int n) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i + 1;
    return ContradictionGraph(std::move(labels));
  }

  /// Graph on labels 1..n with edges given as label pairs.
  static ContradictionGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    ContradictionGraph g = with_vertices(n);
    for (auto [a, b] : edges) g.add_edge(g.vertex_of(a), g.vertex_of(b));
    return g;
  }

  int size() const noexcept { return static_cast<int>(labels_.size()); }
  const std::vector<int>& labels() const noexcept { return labels_; }
  int label(int v) const { return labels_.at(static_cast<std::size_t>(v)); }
  VertexMask neighbors(int v) const { return adjacency_.at(static_cast<std::size_t>(v)); }
  const std::vector<VertexMask>& adjacency() const noexcept { return adjacency_; }

  int vertex_of(int label) const {
    for (std::size_t v = 0; v < labels_.size(); ++v)
      if (labels_[v] == label) return static_cast<int>(v);
    fail(ErrorCode::InvalidArgument, "no vertex with label " + std::to_string(label));
  }

  void add_edge(int u, int v) {
    if (u == v) fail(ErrorCode::InvalidArgument, "self-loops are not allowed");
    if (u < 0 || v < 0 || u >= size() || v >= size())
      fail(ErrorCode::InvalidArgument, "edge endpoint out of range");
    adjacency_[static_cast<std::size_t>(u)] |= bit(v);
    adjacency_[static_cast<std::size_t>(v)] |= bit(u);
  }

  bool has_edge(int u, int v) const { return (neighbors(u) >> v) & 1U; }

  int edge_count() const noexcept {
    int twice = 0;
    for (VertexMask m : adjacency_) twice += std::popcount(m);
    return twice / 2;
  }

  bool is_independent(VertexMask set) const noexcept {
    for (VertexMask rest = set; rest; rest &= rest - 1) {
      const int v = std::countr_zero(rest);
      if (adjacency_[static_cast<std::size_t>(v)] & set) return false;
    }
    return true;
  }

  /// Labels of the vertices in `set`, ascending.
  std::vector<int> labels_of(VertexMask set) const {
    std::vector<int> out;
    for (VertexMask rest = set; rest; rest &= rest - 1)
      out.push_back(labels_[static_cast<std::size_t>(std::countr_zero(rest))]);
    return out;
  }

  friend bool operator==(const ContradictionGraph&, const ContradictionGraph&) = default;

 private:
  std::vector<int> labels_;
  std::vector<VertexMask> adjacency_;
};

}  // namespace relrag
