#include "p2psim/search.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace p2psim {

namespace {

bool visited(const Query& q, PeerId p) {
  return std::find(q.history.begin(), q.history.end(), p) != q.history.end();
}

// Steps 1-3 of the protocol; returns a terminal decision or nothing.
std::optional<StepDecision> local_checks(const PeerState& peer, Query& query) {
  query.history.push_back(peer.id);
  if (peer.shares(query.target)) return Found{};
  if (query.history.size() > static_cast<std::size_t>(query.ttl)) return Failed{};
  if (peer.routing_table.empty()) return Failed{};
  return std::nullopt;
}

}  // namespace

std::vector<std::size_t> guided_order(const RoutingTable& table, FileId target,
                                      const InterestModel& model) {
  const auto entries = table.entries();
  std::vector<double> logp(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    logp[i] = model.score(target, entries[i].file) - model.log2_partition(entries[i].file);
  }
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (logp[a] != logp[b]) return logp[a] > logp[b];
    if (entries[a].peer != entries[b].peer) return entries[a].peer < entries[b].peer;
    return entries[a].file < entries[b].file;
  });
  return order;
}

StepDecision egsp_step(const PeerState& peer, Query& query, const InterestModel& model) {
  if (auto done = local_checks(peer, query)) return *done;
  const auto& table = peer.routing_table;
  const auto order = guided_order(table, query.target, model);
  for (std::size_t i : order) {
    if (!visited(query, table[i].peer)) return Forward{table[i].peer, i, false};
  }
  return Forward{table[order.front()].peer, order.front(), true};
}

StepDecision random_walk_step(const PeerState& peer, Query& query, Rng& rng) {
  if (auto done = local_checks(peer, query)) return *done;
  const auto& table = peer.routing_table;
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!visited(query, table[i].peer)) fresh.push_back(i);
  }
  if (fresh.empty()) {
    const std::size_t i = rng.below(table.size());
    return Forward{table[i].peer, i, true};
  }
  const std::size_t i = fresh[rng.below(fresh.size())];
  return Forward{table[i].peer, i, false};
}

QueryResult execute_query(std::span<PeerState> peers, Query& query, const InterestModel& model,
                          Tick now, SearchMethod method, Rng* rng, bool stamp_entries) {
  if (query.origin.value >= peers.size()) {
    throw std::invalid_argument("query origin " + std::to_string(query.origin.value) +
                                " is not a peer");
  }
  if (!model.catalog().contains(query.target)) {
    throw std::invalid_argument("query target is not in the catalog");
  }
  if (query.ttl < 1) throw std::invalid_argument("query ttl must be positive");
  if (method == SearchMethod::RandomWalk && !rng) {
    throw std::invalid_argument("random walk search needs a random source");
  }

  QueryResult result;
  PeerId current = query.origin;
  Tick clock = now;
  while (true) {
    auto& peer = peers[current.value];
    const StepDecision decision = method == SearchMethod::Guided
                                      ? egsp_step(peer, query, model)
                                      : random_walk_step(peer, query, *rng);
    if (std::holds_alternative<Found>(decision)) {
      result.provider = current;
      break;
    }
    if (std::holds_alternative<Failed>(decision)) break;
    const auto& fwd = std::get<Forward>(decision);
    ++clock;
    if (stamp_entries) peer.routing_table.touch(fwd.entry_index, clock);
    if (fwd.revisit) ++result.revisits;
    ++result.hops;
    current = fwd.next;
  }
  query.completed_at = clock;
  result.history = query.history;
  return result;
}

}  // namespace p2psim
