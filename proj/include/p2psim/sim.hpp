#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "p2psim/metrics.hpp"
#include "p2psim/overlay.hpp"
#include "p2psim/rng.hpp"
#include "p2psim/search.hpp"
#include "p2psim/uim.hpp"

namespace p2psim {

/// Configuration problem, tagged with the offending key and (when parsed
/// from text) the 1-based line number; line 0 means "not from a line".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, std::size_t line, const std::string& message);

  const std::string& key() const { return key_; }
  std::size_t line() const { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

enum class EvictionKind { DistanceProportional, Lru, Eccr, DistanceCentric };

struct SimConfig {
  // Network and workload shape.
  std::size_t peer_count = 0;
  std::size_t catalog_size = 0;
  std::size_t cluster_count = 0;
  std::size_t topics_per_cluster = 4;
  std::size_t files_per_peer = 0;
  std::size_t table_capacity = 0;  // B_r
  int ttl = 0;
  std::vector<std::size_t> batch_sizes;
  double query_locality = 0.8;
  double home_bias = 0.9;

  // Protocol variant.
  SearchMethod search = SearchMethod::Guided;
  bool routing_updates = true;
  bool filtering = false;
  EvictionKind eviction = EvictionKind::DistanceProportional;
  double r = 1.0;
  double pr_e = 0.5;
  double pr_d = 0.5;
  std::size_t filter_bins = 16;
  double filter_decay = 0.999;
  double max_distance = kDefaultMaxDistance;

  // Interest model.
  std::vector<FeatureFunction> features;
  std::size_t training_pairs = 5000;
  TrainingOptions training;

  // Measurement and reproducibility.
  std::size_t path_samples = 2000;
  std::uint64_t seed = 1;
  std::size_t replicas = 1;

  EvictionStrategy eviction_strategy() const;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Default feature set: same cluster, same topic.
std::vector<FeatureFunction> default_features();

/// Throws ConfigError naming the first invalid key.
void validate(const SimConfig& config);

/// Cluster label of a file under round-robin assignment.
inline std::uint32_t cluster_of(FileId file, std::size_t cluster_count) {
  return static_cast<std::uint32_t>(file.value % cluster_count);
}

/// Files get attributes cluster, topic and name; cluster assignment is
/// round-robin so cluster sizes differ by at most one.
Catalog build_catalog(const SimConfig& config);

struct Network {
  std::shared_ptr<const Catalog> catalog;
  std::vector<PeerState> peers;
  std::vector<std::uint32_t> home_cluster;  // per peer
  std::vector<std::vector<FileId>> cluster_files;

  std::size_t cluster_count() const { return cluster_files.size(); }
};

/// Assigns home clusters and shared files, then fills every routing table
/// with exactly table_capacity entries to distinct random peers, one of
/// which follows a random Hamiltonian ring so the graph is strongly
/// connected. Attaches a fresh filter to each peer when filtering is on.
Network bootstrap_network(const SimConfig& config, std::shared_ptr<const Catalog> catalog, Rng& rng);

/// Samples ordered co-shared pairs (source != target) from individual
/// peers' shared sets. Peers sharing fewer than two files contribute none.
std::vector<TrainingPair> extract_training_pairs(const Network& network, std::size_t max_pairs,
                                                 Rng& rng);

/// With probability query_locality the target comes from the peer's home
/// cluster (avoiding files it already shares when it can), otherwise from
/// the whole catalog.
Query generate_query(const Network& network, PeerId origin, const SimConfig& config, Rng& rng,
                     Tick now);

/// Soundness counters collected while a run executes.
struct ExperimentAudit {
  std::size_t queries = 0;
  std::size_t unsound_successes = 0;  // provider does not share the target
  std::size_t ttl_overruns = 0;       // history longer than ttl + 1
  std::size_t phantom_entries = 0;    // entry claims a file its peer lacks
  std::size_t nop_mismatches = 0;     // hops != history length - 1
  TrainingReport training;
};

/// Trains the interest model on pairs extracted from the bootstrap network,
/// then issues each batch of queries from uniformly random origins,
/// applying routing updates after successes when enabled. Deterministic in
/// config.seed. Throws ConfigError before simulating if the config is bad.
MetricsSeries run_experiment(const SimConfig& config, const std::string& mode = "custom",
                             ExperimentAudit* audit = nullptr,
                             std::vector<PeerState>* final_peers = nullptr);

}  // namespace p2psim
