#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "p2psim/graph.hpp"
#include "p2psim/ids.hpp"
#include "p2psim/overlay.hpp"
#include "p2psim/rng.hpp"
#include "p2psim/uim.hpp"

namespace p2psim {

/// One line of the per-query trace.
struct QueryTrace {
  PeerId origin;
  FileId target;
  bool success = false;
  int hops = 0;
  std::size_t history_length = 0;
  std::size_t revisits = 0;
};

/// successes / total. Throws std::domain_error on an empty batch.
double success_rate(std::size_t successes, std::size_t total);
double success_rate(std::span<const QueryTrace> batch);

/// Routing tables as an undirected graph (one edge per distinct entry peer).
UndirectedGraph routing_graph(std::span<const PeerState> peers);

/// Uniform random graph with the given number of distinct edges.
UndirectedGraph random_graph(std::size_t node_count, std::size_t edge_count, Rng& rng);

/// Mean local clustering coefficient. Throws std::domain_error below 3 nodes.
double clustering_coefficient(const UndirectedGraph& graph);

struct PathLengthStats {
  double mean = 0.0;           // over reachable sampled pairs; 0 if none
  std::size_t pairs = 0;       // reachable pairs averaged
  std::size_t unreachable = 0; // sampled pairs with no path
};

/// Mean shortest-path hop count over `sample_size` ordered pairs drawn
/// uniformly with replacement. A sample size of 0 or at least n(n-1) uses
/// every ordered pair exactly once instead.
PathLengthStats avg_path_length(const UndirectedGraph& graph, std::size_t sample_size, Rng& rng);

/// Histogram of entry_distance over every routing entry of every peer.
std::vector<std::uint64_t> entry_distance_histogram(std::span<const PeerState> peers,
                                                    const InterestModel& model,
                                                    std::size_t bin_count);

struct BatchMetrics {
  std::size_t batch_size = 0;
  std::size_t cumulative_queries = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  double success_rate = 0.0;
  std::optional<double> mean_nop;  // over successful queries only
  std::size_t revisit_count = 0;
  std::size_t evictions = 0;
  std::size_t filtered = 0;
  double clustering_coefficient = 0.0;
  double avg_path_length = 0.0;
  std::size_t unreachable_pairs = 0;
  double baseline_clustering = 0.0;
  double baseline_path_length = 0.0;
  std::vector<std::uint64_t> entry_distance_histogram;

  friend bool operator==(const BatchMetrics&, const BatchMetrics&) = default;
};

struct MetricsSeries {
  std::string mode;
  std::string fingerprint;
  std::uint64_t seed = 0;
  std::size_t replica = 0;
  std::vector<BatchMetrics> batches;

  friend bool operator==(const MetricsSeries&, const MetricsSeries&) = default;
};

/// Column order of the per-configuration CSV. The histogram follows as
/// hist_0 .. hist_{K-1}.
inline constexpr const char* kCsvColumns[] = {
    "mode",          "fingerprint",         "seed",
    "replica",       "batch_index",         "batch_size",
    "cumulative_queries", "successes",      "failures",
    "success_rate",  "mean_nop",            "revisit_count",
    "evictions",     "filtered",            "clustering_coefficient",
    "avg_path_length", "unreachable_pairs", "baseline_clustering",
    "baseline_path_length",
};

/// Header plus one row per batch of each series. Reals use six decimals;
/// an undefined mean_nop is an empty field. `bins` fixes the histogram
/// width of the header when the input is empty.
void write_csv(std::span<const MetricsSeries> series, std::ostream& out, std::size_t bins = 16);
void write_csv(std::span<const MetricsSeries> series, const std::string& path,
               std::size_t bins = 16);

/// Parses write_csv output back. Throws std::runtime_error on malformed input.
std::vector<MetricsSeries> read_csv(std::istream& in);

/// Replica-averaged success rate and NOP per (mode, batch). Every row
/// carries the base seed and fingerprint.
void write_comparison(std::span<const MetricsSeries> series, std::uint64_t base_seed,
                      const std::string& fingerprint, std::ostream& out);

/// Line chart of replica-averaged success rate against cumulative queries,
/// one polyline per mode.
void write_svg(std::span<const MetricsSeries> series, std::uint64_t base_seed,
               const std::string& fingerprint, std::ostream& out);

}  // namespace p2psim
