#include "p2psim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace p2psim {

ConfigError::ConfigError(std::string key, std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + key + ": " + message
                              : key + ": " + message),
      key_(std::move(key)),
      line_(line) {}

EvictionStrategy SimConfig::eviction_strategy() const {
  switch (eviction) {
    case EvictionKind::DistanceProportional:
      return DistanceProportional{r};
    case EvictionKind::Lru:
      return LeastRecentlyUsed{};
    case EvictionKind::Eccr:
      return Eccr{pr_e};
    case EvictionKind::DistanceCentric:
      return DistanceCentric{pr_d};
  }
  return DistanceProportional{r};
}

std::vector<FeatureFunction> default_features() {
  return {parse_feature("same(cluster)", 0), parse_feature("same(topic)", 1)};
}

void validate(const SimConfig& c) {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(key, 0, "must be positive");
  };
  auto probability = [](double v, const char* key) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key, 0, "must be in [0, 1]");
  };
  positive(c.peer_count, "peer_count");
  positive(c.catalog_size, "catalog_size");
  positive(c.cluster_count, "cluster_count");
  positive(c.topics_per_cluster, "topics_per_cluster");
  positive(c.files_per_peer, "files_per_peer");
  positive(c.table_capacity, "table_capacity");
  positive(c.filter_bins, "filter_bins");
  positive(c.replicas, "replicas");
  if (c.peer_count < 2) throw ConfigError("peer_count", 0, "needs at least 2 peers");
  if (c.ttl < 1) throw ConfigError("ttl", 0, "must be positive");
  if (c.catalog_size < c.cluster_count) {
    throw ConfigError("cluster_count", 0, "must not exceed catalog_size");
  }
  if (c.files_per_peer > c.catalog_size) {
    throw ConfigError("files_per_peer", 0, "must not exceed catalog_size");
  }
  if (c.table_capacity > c.peer_count - 1) {
    throw ConfigError("table_capacity", 0, "must be below peer_count");
  }
  if (c.batch_sizes.empty()) throw ConfigError("batch_sizes", 0, "needs at least one batch");
  for (std::size_t i = 0; i < c.batch_sizes.size(); ++i) {
    if (c.batch_sizes[i] == 0) throw ConfigError("batch_sizes", 0, "batch sizes must be positive");
    if (i && c.batch_sizes[i] <= c.batch_sizes[i - 1]) {
      throw ConfigError("batch_sizes", 0, "batch sizes must be strictly increasing");
    }
  }
  probability(c.query_locality, "query_locality");
  probability(c.home_bias, "home_bias");
  probability(c.pr_e, "pr_e");
  probability(c.pr_d, "pr_d");
  if (!(c.r >= 0.0) || !std::isfinite(c.r)) throw ConfigError("r", 0, "must be finite and >= 0");
  if (!(c.filter_decay > 0.0 && c.filter_decay <= 1.0)) {
    throw ConfigError("filter_decay", 0, "must be in (0, 1]");
  }
  if (!(c.max_distance > 0.0) || !std::isfinite(c.max_distance)) {
    throw ConfigError("max_distance", 0, "must be positive and finite");
  }
  if (c.features.size() > ActivationMatrix::kMaxFeatures) {
    throw ConfigError("feature", 0, "at most 64 features are supported");
  }
  if (!(c.training.step_size > 0.0)) throw ConfigError("train_step", 0, "must be positive");
  if (c.training.max_iterations < 1) throw ConfigError("train_iterations", 0, "must be >= 1");
  if (!(c.training.l2_penalty >= 0.0)) throw ConfigError("train_l2", 0, "must be >= 0");
}

Catalog build_catalog(const SimConfig& config) {
  std::vector<FileRecord> files;
  files.reserve(config.catalog_size);
  for (std::uint32_t i = 0; i < config.catalog_size; ++i) {
    const auto cluster = i % config.cluster_count;
    const auto topic = (i / config.cluster_count) % config.topics_per_cluster;
    files.push_back(FileRecord{
        FileId{i},
        {{"cluster", "c" + std::to_string(cluster)},
         {"topic", "c" + std::to_string(cluster) + "-t" + std::to_string(topic)},
         {"name", "file-" + std::to_string(i)}}});
  }
  return Catalog(std::move(files));
}

namespace {

constexpr std::uint64_t kHomeStream = 1;
constexpr std::uint64_t kRingStream = 2;
constexpr std::uint64_t kPeerStreamBase = 1000;

std::vector<FileId> draw_shared_files(const SimConfig& config, const Network& net,
                                      std::uint32_t home, Rng& rng) {
  const auto& home_files = net.cluster_files[home];
  std::vector<FileId> files;
  std::size_t attempts = 0;
  while (files.size() < config.files_per_peer) {
    // A home cluster smaller than files_per_peer cannot satisfy the bias.
    const bool from_home = attempts < 64 * config.files_per_peer && rng.bernoulli(config.home_bias);
    const FileId f = from_home ? home_files[rng.below(home_files.size())]
                               : FileId{static_cast<std::uint32_t>(rng.below(config.catalog_size))};
    ++attempts;
    if (std::find(files.begin(), files.end(), f) == files.end()) files.push_back(f);
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

Network bootstrap_network(const SimConfig& config, std::shared_ptr<const Catalog> catalog,
                          Rng& rng) {
  validate(config);
  if (!catalog || catalog->size() != config.catalog_size) {
    throw std::invalid_argument("catalog does not match the configuration");
  }
  Network net;
  net.catalog = std::move(catalog);
  net.cluster_files.resize(config.cluster_count);
  for (std::uint32_t i = 0; i < config.catalog_size; ++i) {
    net.cluster_files[cluster_of(FileId{i}, config.cluster_count)].push_back(FileId{i});
  }

  const std::size_t n = config.peer_count;
  Rng homes = rng.child(kHomeStream);
  net.home_cluster.resize(n);
  for (auto& h : net.home_cluster) h = static_cast<std::uint32_t>(homes.below(config.cluster_count));

  net.peers.reserve(n);
  std::vector<Rng> peer_rng;
  peer_rng.reserve(n);
  for (std::uint32_t p = 0; p < n; ++p) {
    peer_rng.push_back(rng.child(kPeerStreamBase + p));
    PeerState peer{PeerId{p}, draw_shared_files(config, net, net.home_cluster[p], peer_rng[p]),
                   RoutingTable(config.table_capacity), std::nullopt};
    if (config.filtering) {
      peer.filter.emplace(config.filter_bins, config.max_distance, config.filter_decay);
    }
    net.peers.push_back(std::move(peer));
  }

  // Random ring: peer order[k] links to order[k+1].
  Rng ring = rng.child(kRingStream);
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[ring.below(i + 1)]);
  std::vector<std::uint32_t> successor(n);
  for (std::size_t k = 0; k < n; ++k) successor[order[k]] = order[(k + 1) % n];

  for (std::uint32_t p = 0; p < n; ++p) {
    auto& table = net.peers[p].routing_table;
    auto& prng = peer_rng[p];
    auto link = [&](std::uint32_t q) {
      const auto& files = net.peers[q].shared_files;
      table.insert(RoutingEntry{PeerId{q}, files[prng.below(files.size())], 0});
    };
    std::vector<char> used(n, 0);
    used[p] = 1;
    used[successor[p]] = 1;
    link(successor[p]);
    while (table.size() < config.table_capacity) {
      const auto q = static_cast<std::uint32_t>(prng.below(n));
      if (used[q]) continue;
      used[q] = 1;
      link(q);
    }
  }
  return net;
}

std::vector<TrainingPair> extract_training_pairs(const Network& network, std::size_t max_pairs,
                                                 Rng& rng) {
  std::vector<const PeerState*> eligible;
  for (const auto& p : network.peers) {
    if (p.shared_files.size() >= 2) eligible.push_back(&p);
  }
  std::vector<TrainingPair> pairs;
  if (eligible.empty()) return pairs;
  pairs.reserve(max_pairs);
  for (std::size_t k = 0; k < max_pairs; ++k) {
    const auto& files = eligible[rng.below(eligible.size())]->shared_files;
    const std::size_t a = rng.below(files.size());
    std::size_t b = rng.below(files.size() - 1);
    if (b >= a) ++b;
    pairs.push_back(TrainingPair{files[a], files[b]});
  }
  return pairs;
}

Query generate_query(const Network& network, PeerId origin, const SimConfig& config, Rng& rng,
                     Tick now) {
  const auto& peer = network.peers.at(origin.value);
  FileId target;
  if (rng.bernoulli(config.query_locality)) {
    const auto& home = network.cluster_files[network.home_cluster[origin.value]];
    std::vector<FileId> fresh;
    for (FileId f : home) {
      if (!peer.shares(f)) fresh.push_back(f);
    }
    const auto& pool = fresh.empty() ? home : fresh;
    target = pool[rng.below(pool.size())];
  } else {
    target = FileId{static_cast<std::uint32_t>(rng.below(network.catalog->size()))};
  }
  return Query{origin, target, {}, config.ttl, now, std::nullopt};
}

namespace {

enum Stream : std::uint64_t {
  kBootstrap = 1,
  kTraining = 2,
  kWorkload = 3,
  kUpdates = 4,
  kWalk = 5,
  kPaths = 6,
  kBaseline = 7,
};

}  // namespace

MetricsSeries run_experiment(const SimConfig& config, const std::string& mode,
                             ExperimentAudit* audit, std::vector<PeerState>* final_peers) {
  validate(config);
  const Rng root(config.seed);
  Rng bootstrap_rng = root.child(kBootstrap);
  Rng training_rng = root.child(kTraining);
  Rng workload = root.child(kWorkload);
  Rng updates = root.child(kUpdates);
  Rng walk = root.child(kWalk);
  Rng paths = root.child(kPaths);
  Rng baseline = root.child(kBaseline);

  auto catalog = std::make_shared<const Catalog>(build_catalog(config));
  Network net = bootstrap_network(config, catalog, bootstrap_rng);

  InterestModel model(catalog, config.features, {}, config.max_distance);
  ExperimentAudit local_audit;
  ExperimentAudit& au = audit ? *audit : local_audit;
  au = ExperimentAudit{};
  const auto pairs = extract_training_pairs(net, config.training_pairs, training_rng);
  if (!pairs.empty() && !config.features.empty()) {
    model = train_weights(model, pairs, config.training, &au.training);
  }

  const auto strategy = config.eviction_strategy();
  MetricsSeries series;
  series.mode = mode;
  series.seed = config.seed;

  Tick clock = 0;
  std::size_t cumulative = 0;
  for (std::size_t batch_size : config.batch_sizes) {
    BatchMetrics m;
    m.batch_size = batch_size;
    double nop_total = 0.0;
    for (std::size_t q = 0; q < batch_size; ++q) {
      const PeerId origin{static_cast<std::uint32_t>(workload.below(net.peers.size()))};
      Query query = generate_query(net, origin, config, workload, clock);
      const auto result = execute_query(net.peers, query, model, clock, config.search, &walk,
                                        config.routing_updates);
      clock = *query.completed_at + 1;

      ++au.queries;
      if (result.history.size() > static_cast<std::size_t>(config.ttl) + 1) ++au.ttl_overruns;
      if (static_cast<std::size_t>(result.hops) + 1 != result.history.size()) ++au.nop_mismatches;
      m.revisit_count += result.revisits;
      if (!result.success()) {
        ++m.failures;
        continue;
      }
      ++m.successes;
      nop_total += result.hops;
      if (!net.peers[result.provider->value].shares(query.target)) {
        ++au.unsound_successes;
        continue;
      }
      if (config.routing_updates) {
        const auto outcome = urtp_apply(net.peers, result.history, *result.provider, query.target,
                                        strategy, model, updates, clock);
        m.evictions += outcome.evictions.size();
        m.filtered += outcome.filtered;
      }
    }
    cumulative += batch_size;
    m.cumulative_queries = cumulative;
    m.success_rate = success_rate(m.successes, batch_size);
    if (m.successes) m.mean_nop = nop_total / static_cast<double>(m.successes);

    const auto graph = routing_graph(net.peers);
    m.clustering_coefficient = clustering_coefficient(graph);
    const auto apl = avg_path_length(graph, config.path_samples, paths);
    m.avg_path_length = apl.mean;
    m.unreachable_pairs = apl.unreachable;
    const auto random = random_graph(graph.node_count(), graph.edge_count(), baseline);
    m.baseline_clustering = clustering_coefficient(random);
    m.baseline_path_length = avg_path_length(random, config.path_samples, baseline).mean;
    m.entry_distance_histogram = entry_distance_histogram(net.peers, model, config.filter_bins);

    for (const auto& p : net.peers) {
      for (const auto& e : p.routing_table.entries()) {
        if (!net.peers[e.peer.value].shares(e.file)) ++au.phantom_entries;
      }
    }
    series.batches.push_back(std::move(m));
  }
  if (final_peers) *final_peers = std::move(net.peers);
  return series;
}

}  // namespace p2psim
