#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace p2psim {

/// Simple undirected graph with sorted, duplicate-free adjacency lists and
/// no self loops.
class UndirectedGraph {
 public:
  explicit UndirectedGraph(std::size_t node_count = 0) : adjacency_(node_count) {}

  /// Builds from an arbitrary (possibly directed, duplicated) edge list.
  static UndirectedGraph from_edges(std::size_t node_count,
                                    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

  std::size_t node_count() const { return adjacency_.size(); }
  std::size_t edge_count() const;
  const std::vector<std::uint32_t>& neighbors(std::uint32_t node) const { return adjacency_[node]; }
  bool has_edge(std::uint32_t a, std::uint32_t b) const;

 private:
  std::vector<std::vector<std::uint32_t>> adjacency_;
};

}  // namespace p2psim
