#pragma once

// Data-parallel kernels. Every kernel has an OpenMP version and a `_serial`
// reference with identical results; outputs are written per element and any
// reduction happens serially afterwards, so results do not depend on the
// thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "p2psim/graph.hpp"
#include "p2psim/uim.hpp"

namespace p2psim::kernels {

/// Evaluates every feature on every (target, source) pair of the catalog.
ActivationMatrix feature_activations(const Catalog& catalog,
                                     std::span<const FeatureFunction> features);
ActivationMatrix feature_activations_serial(const Catalog& catalog,
                                            std::span<const FeatureFunction> features);

/// log2 Z(source) for every source column.
std::vector<double> column_log_partition(const ActivationMatrix& activations,
                                         std::span<const double> weights);
std::vector<double> column_log_partition_serial(const ActivationMatrix& activations,
                                                std::span<const double> weights);

/// Per requested column: log2 Z and E_{f~Pr(.|source)} F_h(f, source).
struct ColumnMoments {
  std::size_t feature_count = 0;
  std::vector<double> log2_partition;  // one per column
  std::vector<double> expectations;    // column-major, feature_count per column

  std::span<const double> expectation(std::size_t column) const {
    return {expectations.data() + column * feature_count, feature_count};
  }
};

ColumnMoments column_moments(const ActivationMatrix& activations,
                             std::span<const double> weights,
                             std::span<const FileId> columns);
ColumnMoments column_moments_serial(const ActivationMatrix& activations,
                                    std::span<const double> weights,
                                    std::span<const FileId> columns);

/// Local clustering coefficient of every node; nodes of degree < 2 get 0.
std::vector<double> local_clustering(const UndirectedGraph& graph);
std::vector<double> local_clustering_serial(const UndirectedGraph& graph);

/// Triangle count through each node (pairs of linked neighbours).
std::vector<std::uint64_t> node_triangles(const UndirectedGraph& graph);

/// Breadth-first hop counts from `source`; unreachable nodes get -1.
std::vector<int> bfs_hops(const UndirectedGraph& graph, std::uint32_t source);

/// Full BFS rows for each source, row-major (node_count entries per source).
std::vector<int> hop_rows(const UndirectedGraph& graph, std::span<const std::uint32_t> sources);
std::vector<int> hop_rows_serial(const UndirectedGraph& graph,
                                 std::span<const std::uint32_t> sources);

}  // namespace p2psim::kernels
