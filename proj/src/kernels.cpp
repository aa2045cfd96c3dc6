#include "p2psim/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>

namespace p2psim::kernels {

namespace {

void fill_activation_column(const Catalog& catalog, std::span<const FeatureFunction> features,
                            FileId source, std::span<std::uint64_t> column) {
  const auto& src = catalog[source];
  for (std::size_t t = 0; t < column.size(); ++t) {
    const auto& tgt = catalog.files()[t];
    std::uint64_t mask = 0;
    for (std::size_t h = 0; h < features.size(); ++h) {
      if (evaluate_feature(features[h], tgt, src)) mask |= std::uint64_t{1} << h;
    }
    column[t] = mask;
  }
}

double log2_sum_exp2(std::span<const std::uint64_t> column, std::span<const double> weights,
                     std::vector<double>& scores) {
  scores.resize(column.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < column.size(); ++t) {
    scores[t] = masked_score(column[t], weights);
    peak = std::max(peak, scores[t]);
  }
  double sum = 0.0;
  for (double s : scores) sum += std::exp2(s - peak);
  return peak + std::log2(sum);
}

void moments_for_column(std::span<const std::uint64_t> column, std::span<const double> weights,
                        std::vector<double>& scores, double& log2_z,
                        std::span<double> expectation) {
  log2_z = log2_sum_exp2(column, weights, scores);
  std::fill(expectation.begin(), expectation.end(), 0.0);
  for (std::size_t t = 0; t < column.size(); ++t) {
    std::uint64_t mask = column[t];
    if (!mask) continue;
    const double p = std::exp2(scores[t] - log2_z);
    while (mask) {
      expectation[static_cast<std::size_t>(std::countr_zero(mask))] += p;
      mask &= mask - 1;
    }
  }
}

ColumnMoments make_moments(const ActivationMatrix& a, std::size_t columns) {
  ColumnMoments m;
  m.feature_count = a.feature_count();
  m.log2_partition.assign(columns, 0.0);
  m.expectations.assign(columns * a.feature_count(), 0.0);
  return m;
}

double local_coefficient(const UndirectedGraph& g, std::uint32_t v, std::vector<char>& mark,
                         std::uint64_t* triangles_out) {
  const auto& nb = g.neighbors(v);
  const std::size_t k = nb.size();
  for (auto u : nb) mark[u] = 1;
  std::uint64_t links = 0;
  for (auto u : nb) {
    for (auto w : g.neighbors(u)) {
      if (w > u && mark[w]) ++links;
    }
  }
  for (auto u : nb) mark[u] = 0;
  if (triangles_out) *triangles_out = links;
  if (k < 2) return 0.0;
  return static_cast<double>(links) / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

}  // namespace

ActivationMatrix feature_activations(const Catalog& catalog,
                                     std::span<const FeatureFunction> features) {
  ActivationMatrix out(catalog.size(), features.size());
  const auto n = static_cast<std::int64_t>(catalog.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const FileId source{static_cast<std::uint32_t>(i)};
    fill_activation_column(catalog, features, source, out.column(source));
  }
  return out;
}

ActivationMatrix feature_activations_serial(const Catalog& catalog,
                                            std::span<const FeatureFunction> features) {
  ActivationMatrix out(catalog.size(), features.size());
  for (std::uint32_t i = 0; i < catalog.size(); ++i) {
    fill_activation_column(catalog, features, FileId{i}, out.column(FileId{i}));
  }
  return out;
}

std::vector<double> column_log_partition(const ActivationMatrix& activations,
                                         std::span<const double> weights) {
  std::vector<double> out(activations.file_count());
  const auto n = static_cast<std::int64_t>(out.size());
#pragma omp parallel
  {
    std::vector<double> scores;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      out[i] = log2_sum_exp2(activations.column(FileId{static_cast<std::uint32_t>(i)}), weights,
                             scores);
    }
  }
  return out;
}

std::vector<double> column_log_partition_serial(const ActivationMatrix& activations,
                                                std::span<const double> weights) {
  std::vector<double> out(activations.file_count());
  std::vector<double> scores;
  for (std::uint32_t i = 0; i < out.size(); ++i) {
    out[i] = log2_sum_exp2(activations.column(FileId{i}), weights, scores);
  }
  return out;
}

ColumnMoments column_moments(const ActivationMatrix& activations,
                             std::span<const double> weights, std::span<const FileId> columns) {
  auto m = make_moments(activations, columns.size());
  const auto n = static_cast<std::int64_t>(columns.size());
  const std::size_t k = activations.feature_count();
#pragma omp parallel
  {
    std::vector<double> scores;
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < n; ++c) {
      moments_for_column(activations.column(columns[c]), weights, scores, m.log2_partition[c],
                         std::span<double>(m.expectations.data() + c * k, k));
    }
  }
  return m;
}

ColumnMoments column_moments_serial(const ActivationMatrix& activations,
                                    std::span<const double> weights,
                                    std::span<const FileId> columns) {
  auto m = make_moments(activations, columns.size());
  const std::size_t k = activations.feature_count();
  std::vector<double> scores;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    moments_for_column(activations.column(columns[c]), weights, scores, m.log2_partition[c],
                       std::span<double>(m.expectations.data() + c * k, k));
  }
  return m;
}

std::vector<double> local_clustering(const UndirectedGraph& graph) {
  std::vector<double> out(graph.node_count(), 0.0);
  const auto n = static_cast<std::int64_t>(graph.node_count());
#pragma omp parallel
  {
    std::vector<char> mark(graph.node_count(), 0);
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t v = 0; v < n; ++v) {
      out[v] = local_coefficient(graph, static_cast<std::uint32_t>(v), mark, nullptr);
    }
  }
  return out;
}

std::vector<double> local_clustering_serial(const UndirectedGraph& graph) {
  std::vector<double> out(graph.node_count(), 0.0);
  std::vector<char> mark(graph.node_count(), 0);
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    out[v] = local_coefficient(graph, v, mark, nullptr);
  }
  return out;
}

std::vector<std::uint64_t> node_triangles(const UndirectedGraph& graph) {
  std::vector<std::uint64_t> out(graph.node_count(), 0);
  std::vector<char> mark(graph.node_count(), 0);
  for (std::uint32_t v = 0; v < graph.node_count(); ++v) {
    local_coefficient(graph, v, mark, &out[v]);
  }
  return out;
}

std::vector<int> bfs_hops(const UndirectedGraph& graph, std::uint32_t source) {
  std::vector<int> hops(graph.node_count(), -1);
  std::vector<std::uint32_t> frontier{source};
  std::vector<std::uint32_t> next;
  hops[source] = 0;
  for (int depth = 1; !frontier.empty(); ++depth) {
    next.clear();
    for (auto v : frontier) {
      for (auto u : graph.neighbors(v)) {
        if (hops[u] < 0) {
          hops[u] = depth;
          next.push_back(u);
        }
      }
    }
    frontier.swap(next);
  }
  return hops;
}

std::vector<int> hop_rows(const UndirectedGraph& graph, std::span<const std::uint32_t> sources) {
  const std::size_t n = graph.node_count();
  std::vector<int> out(sources.size() * n);
  const auto count = static_cast<std::int64_t>(sources.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t s = 0; s < count; ++s) {
    const auto row = bfs_hops(graph, sources[s]);
    std::copy(row.begin(), row.end(), out.begin() + s * static_cast<std::int64_t>(n));
  }
  return out;
}

std::vector<int> hop_rows_serial(const UndirectedGraph& graph,
                                 std::span<const std::uint32_t> sources) {
  const std::size_t n = graph.node_count();
  std::vector<int> out;
  out.reserve(sources.size() * n);
  for (auto s : sources) {
    const auto row = bfs_hops(graph, s);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace p2psim::kernels
