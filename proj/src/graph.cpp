#include "p2psim/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace p2psim {

UndirectedGraph UndirectedGraph::from_edges(
    std::size_t node_count, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  UndirectedGraph g(node_count);
  for (auto [a, b] : edges) {
    if (a >= node_count || b >= node_count) throw std::out_of_range("edge endpoint out of range");
    if (a == b) continue;
    g.adjacency_[a].push_back(b);
    g.adjacency_[b].push_back(a);
  }
  for (auto& nb : g.adjacency_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return g;
}

std::size_t UndirectedGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& nb : adjacency_) twice += nb.size();
  return twice / 2;
}

bool UndirectedGraph::has_edge(std::uint32_t a, std::uint32_t b) const {
  const auto& nb = adjacency_.at(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

}  // namespace p2psim
