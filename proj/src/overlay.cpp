#include "p2psim/overlay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace p2psim {

RoutingTable::RoutingTable(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("routing table capacity must be positive");
  entries_.reserve(capacity + 1);
}

std::optional<std::size_t> RoutingTable::find(PeerId peer, FileId file) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].peer == peer && entries_[i].file == file) return i;
  }
  return std::nullopt;
}

bool RoutingTable::insert(const RoutingEntry& entry) {
  if (auto i = find(entry.peer, entry.file)) {
    entries_[*i].last_used = std::max(entries_[*i].last_used, entry.last_used);
    return false;
  }
  entries_.push_back(entry);
  return true;
}

RoutingEntry RoutingTable::remove_at(std::size_t index) {
  RoutingEntry e = entries_.at(index);
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
  return e;
}

// ---------------------------------------------------------------------------
// Filter

FilterState::FilterState(std::size_t bin_count, double max_distance, double decay)
    : max_distance_(max_distance),
      decay_(decay),
      density_(bin_count, 0.0),
      accepted_(bin_count, 0.0) {
  if (bin_count == 0) throw std::invalid_argument("filter needs at least one bin");
  if (!(max_distance > 0.0)) throw std::invalid_argument("filter max distance must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("filter decay must be in (0, 1]");
}

std::size_t FilterState::bin_of(double d) const {
  const double x = std::clamp(d / max_distance_, 0.0, 1.0);
  const auto k = density_.size();
  return std::min(k - 1, static_cast<std::size_t>(x * static_cast<double>(k)));
}

double FilterState::acceptance_probability(double d) const {
  const std::size_t bin = bin_of(d);
  double floor = density_[bin];
  for (double c : density_) {
    if (c > 0.0) floor = std::min(floor, c);
  }
  return (floor + 1.0) / (density_[bin] + 1.0);
}

bool FilterState::offer(double d, Rng& rng) {
  const double p = acceptance_probability(d);
  const bool accept = rng.uniform() < p;
  for (double& c : density_) c *= decay_;
  const std::size_t bin = bin_of(d);
  density_[bin] += 1.0;
  if (accept) accepted_[bin] += 1.0;
  return accept;
}

void FilterState::set_density(std::vector<double> density) {
  if (density.size() != density_.size()) throw std::invalid_argument("filter bin count mismatch");
  for (double c : density) {
    if (!(c >= 0.0)) throw std::invalid_argument("filter density must be non-negative");
  }
  density_ = std::move(density);
}

// ---------------------------------------------------------------------------
// Eviction

void validate(const EvictionStrategy& strategy) {
  auto check_probability = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
    }
  };
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DistanceProportional>) {
          if (!(s.r >= 0.0) || !std::isfinite(s.r)) {
            throw std::invalid_argument("eviction exponent r must be finite and >= 0");
          }
        } else if constexpr (std::is_same_v<S, Eccr>) {
          check_probability(s.pr_e, "pr_e");
        } else if constexpr (std::is_same_v<S, DistanceCentric>) {
          check_probability(s.pr_d, "pr_d");
        }
      },
      strategy);
}

bool PeerState::shares(FileId file) const {
  return std::binary_search(shared_files.begin(), shared_files.end(), file);
}

double entry_distance(const InterestModel& model, const RoutingEntry& entry,
                      std::span<const FileId> owner_files) {
  const FileId advertised[] = {entry.file};
  return peer_distance(model, advertised, owner_files);
}

std::size_t pick_distance_proportional(std::span<const double> distances, double r, Rng& rng) {
  if (distances.empty()) throw std::invalid_argument("cannot evict from an empty table");
  std::vector<double> weight(distances.size());
  double total = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    weight[i] = std::pow(distances[i], r);
    total += weight[i];
  }
  if (!(total > 0.0) || !std::isfinite(total)) return rng.below(distances.size());
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (u < weight[i]) return i;
    u -= weight[i];
  }
  // Rounding left u just past the last positive weight.
  for (std::size_t i = weight.size(); i-- > 0;) {
    if (weight[i] > 0.0) return i;
  }
  return weight.size() - 1;
}

std::size_t pick_lru(std::span<const RoutingEntry> entries) {
  if (entries.empty()) throw std::invalid_argument("cannot evict from an empty table");
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const auto& a = entries[i];
    const auto& b = entries[best];
    if (a.last_used < b.last_used ||
        (a.last_used == b.last_used && (a.peer < b.peer || (a.peer == b.peer && a.file < b.file)))) {
      best = i;
    }
  }
  return best;
}

std::vector<std::size_t> rank_by_distance(std::span<const RoutingEntry> entries,
                                          std::span<const double> distances) {
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (distances[a] != distances[b]) return distances[a] > distances[b];
    if (entries[a].peer != entries[b].peer) return entries[a].peer < entries[b].peer;
    return entries[a].file < entries[b].file;
  });
  return order;
}

std::size_t pick_eccr(std::span<const RoutingEntry> entries, std::span<const double> distances,
                      double pr_e, Rng& rng) {
  if (entries.empty()) throw std::invalid_argument("cannot evict from an empty table");
  if (rng.bernoulli(pr_e)) return pick_lru(entries);
  return rank_by_distance(entries, distances).front();
}

std::size_t pick_dc(std::span<const RoutingEntry> entries, std::span<const double> distances,
                    double pr_d, Rng& rng) {
  if (entries.empty()) throw std::invalid_argument("cannot evict from an empty table");
  if (entries.size() == 1) return 0;
  const auto order = rank_by_distance(entries, distances);
  return rng.bernoulli(pr_d) ? order[0] : order[1];
}

namespace {

std::vector<double> table_distances(const RoutingTable& table, std::span<const FileId> owner_files,
                                    const InterestModel& model) {
  std::vector<double> d;
  d.reserve(table.size());
  for (const auto& e : table.entries()) d.push_back(entry_distance(model, e, owner_files));
  return d;
}

}  // namespace

RoutingEntry evict_distance_proportional(RoutingTable& table, std::span<const FileId> owner_files,
                                         const InterestModel& model, double r, Rng& rng) {
  const auto d = table_distances(table, owner_files, model);
  return table.remove_at(pick_distance_proportional(d, r, rng));
}

RoutingEntry evict_lru(RoutingTable& table) { return table.remove_at(pick_lru(table.entries())); }

RoutingEntry evict_eccr(RoutingTable& table, std::span<const FileId> owner_files,
                        const InterestModel& model, double pr_e, Rng& rng) {
  const auto d = table_distances(table, owner_files, model);
  return table.remove_at(pick_eccr(table.entries(), d, pr_e, rng));
}

RoutingEntry evict_dc(RoutingTable& table, std::span<const FileId> owner_files,
                      const InterestModel& model, double pr_d, Rng& rng) {
  const auto d = table_distances(table, owner_files, model);
  return table.remove_at(pick_dc(table.entries(), d, pr_d, rng));
}

RoutingEntry evict(RoutingTable& table, const EvictionStrategy& strategy,
                   std::span<const FileId> owner_files, const InterestModel& model, Rng& rng) {
  return std::visit(
      [&](const auto& s) -> RoutingEntry {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DistanceProportional>) {
          return evict_distance_proportional(table, owner_files, model, s.r, rng);
        } else if constexpr (std::is_same_v<S, LeastRecentlyUsed>) {
          return evict_lru(table);
        } else if constexpr (std::is_same_v<S, Eccr>) {
          return evict_eccr(table, owner_files, model, s.pr_e, rng);
        } else {
          return evict_dc(table, owner_files, model, s.pr_d, rng);
        }
      },
      strategy);
}

UpdateOutcome urtp_apply(std::span<PeerState> peers, std::span<const PeerId> history,
                         PeerId provider, FileId file, const EvictionStrategy& strategy,
                         const InterestModel& model, Rng& rng, Tick now) {
  if (provider.value >= peers.size() || !peers[provider.value].shares(file)) {
    throw std::invalid_argument("routing update: provider " + std::to_string(provider.value) +
                                " does not share file " + std::to_string(file.value));
  }
  UpdateOutcome out;
  std::unordered_set<PeerId> seen;
  const RoutingEntry candidate{provider, file, now};
  for (PeerId id : history) {
    if (id == provider || !seen.insert(id).second) continue;
    auto& peer = peers[id.value];
    auto& table = peer.routing_table;
    if (auto existing = table.find(provider, file)) {
      table.touch(*existing, std::max(table[*existing].last_used, now));
      ++out.refreshed;
      continue;
    }
    if (peer.filter) {
      const double d = entry_distance(model, candidate, peer.shared_files);
      if (!peer.filter->offer(d, rng)) {
        ++out.filtered;
        continue;
      }
    }
    table.insert(candidate);
    ++out.inserted;
    while (table.over_capacity()) {
      out.evictions.push_back({id, evict(table, strategy, peer.shared_files, model, rng)});
    }
  }
  return out;
}

}  // namespace p2psim
