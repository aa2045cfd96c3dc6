#pragma once

// Per-peer routing state and the routing-table update protocol: after a
// successful search every peer on the search path learns <provider, file>,
// and over-full tables shed entries according to an eviction strategy.

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "p2psim/ids.hpp"
#include "p2psim/rng.hpp"
#include "p2psim/uim.hpp"

namespace p2psim {

struct RoutingEntry {
  PeerId peer;
  FileId file;
  Tick last_used = 0;

  friend bool operator==(const RoutingEntry&, const RoutingEntry&) = default;
};

class RoutingTable {
 public:
  explicit RoutingTable(std::size_t capacity = 1);

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool over_capacity() const { return entries_.size() > capacity_; }
  std::span<const RoutingEntry> entries() const { return entries_; }
  const RoutingEntry& operator[](std::size_t i) const { return entries_[i]; }

  std::optional<std::size_t> find(PeerId peer, FileId file) const;

  /// Appends the entry, or refreshes last_used if (peer, file) is already
  /// present. Returns true when a new entry was added. May leave the table
  /// over capacity; callers evict afterwards.
  bool insert(const RoutingEntry& entry);

  /// Removes the entry at `index`, keeping the order of the others.
  RoutingEntry remove_at(std::size_t index);

  void touch(std::size_t index, Tick now) { entries_.at(index).last_used = now; }

  friend bool operator==(const RoutingTable&, const RoutingTable&) = default;

 private:
  std::size_t capacity_;
  std::vector<RoutingEntry> entries_;
};

/// Density-based admission control for routing-table updates. Keeps a
/// decayed histogram of the interest distances of offered candidates and
/// admits a candidate with probability
///
///   (min density over occupied bins + 1) / (density[bin(d)] + 1)
///
/// so bins that see many candidates admit proportionally fewer of them and
/// admitted entries spread evenly across the distances actually offered.
class FilterState {
 public:
  FilterState(std::size_t bin_count = 16, double max_distance = kDefaultMaxDistance,
              double decay = 0.999);

  std::size_t bin_count() const { return density_.size(); }
  double max_distance() const { return max_distance_; }
  double decay() const { return decay_; }

  /// Bin of distance d; distances outside [0, max_distance] are clamped.
  std::size_t bin_of(double d) const;

  double acceptance_probability(double d) const;

  /// Offers a candidate at distance d. Records it in the density histogram
  /// (all bins decay by the factor first) and, when admitted, in the
  /// accepted histogram.
  bool offer(double d, Rng& rng);

  std::span<const double> density() const { return density_; }
  std::span<const double> accepted() const { return accepted_; }

  /// Replaces the density histogram (sizes must match; values >= 0).
  void set_density(std::vector<double> density);

  friend bool operator==(const FilterState&, const FilterState&) = default;

 private:
  double max_distance_;
  double decay_;
  std::vector<double> density_;
  std::vector<double> accepted_;
};

struct DistanceProportional {
  double r = 1.0;
};
struct LeastRecentlyUsed {};
/// LRU with probability pr_e, otherwise the farthest entry.
struct Eccr {
  double pr_e = 0.5;
};
/// Farthest entry with probability pr_d, otherwise the second farthest.
struct DistanceCentric {
  double pr_d = 0.5;
};

using EvictionStrategy = std::variant<DistanceProportional, LeastRecentlyUsed, Eccr, DistanceCentric>;

/// Throws std::invalid_argument on r < 0 or probabilities outside [0, 1].
void validate(const EvictionStrategy& strategy);

struct PeerState {
  PeerId id;
  std::vector<FileId> shared_files;  // sorted, unique, non-empty
  RoutingTable routing_table;
  std::optional<FilterState> filter;

  bool shares(FileId file) const;
};

/// Interest distance from an entry toward the table owner: the closest
/// link from the entry's advertised file to any file the owner shares.
double entry_distance(const InterestModel& model, const RoutingEntry& entry,
                      std::span<const FileId> owner_files);

// Victim selection over parallel (entries, distances) arrays. All return an
// index into `entries`; the tables must be non-empty.

std::size_t pick_distance_proportional(std::span<const double> distances, double r, Rng& rng);
/// Smallest last_used; ties go to the lowest peer id.
std::size_t pick_lru(std::span<const RoutingEntry> entries);
/// Entries ordered by distance, farthest first; ties by lowest peer id.
std::vector<std::size_t> rank_by_distance(std::span<const RoutingEntry> entries,
                                          std::span<const double> distances);
std::size_t pick_eccr(std::span<const RoutingEntry> entries, std::span<const double> distances,
                      double pr_e, Rng& rng);
std::size_t pick_dc(std::span<const RoutingEntry> entries, std::span<const double> distances,
                    double pr_d, Rng& rng);

RoutingEntry evict_distance_proportional(RoutingTable& table, std::span<const FileId> owner_files,
                                         const InterestModel& model, double r, Rng& rng);
RoutingEntry evict_lru(RoutingTable& table);
RoutingEntry evict_eccr(RoutingTable& table, std::span<const FileId> owner_files,
                        const InterestModel& model, double pr_e, Rng& rng);
RoutingEntry evict_dc(RoutingTable& table, std::span<const FileId> owner_files,
                      const InterestModel& model, double pr_d, Rng& rng);
RoutingEntry evict(RoutingTable& table, const EvictionStrategy& strategy,
                   std::span<const FileId> owner_files, const InterestModel& model, Rng& rng);

struct Eviction {
  PeerId owner;
  RoutingEntry entry;
};

struct UpdateOutcome {
  std::size_t inserted = 0;
  std::size_t refreshed = 0;
  std::size_t filtered = 0;  // candidates rejected by a peer's filter
  std::vector<Eviction> evictions;
};

/// Applies one successful search to the routing tables: every distinct peer
/// on `history` other than the provider learns <provider, file>, subject to
/// its filter when it has one, then evicts down to capacity. Throws
/// std::invalid_argument if the provider does not share the file.
UpdateOutcome urtp_apply(std::span<PeerState> peers, std::span<const PeerId> history,
                         PeerId provider, FileId file, const EvictionStrategy& strategy,
                         const InterestModel& model, Rng& rng, Tick now);

}  // namespace p2psim
