#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "p2psim/ids.hpp"
#include "p2psim/overlay.hpp"
#include "p2psim/rng.hpp"
#include "p2psim/uim.hpp"

namespace p2psim {

struct Query {
  PeerId origin;
  FileId target;
  std::vector<PeerId> history;
  int ttl = 1;
  Tick issued_at = 0;
  std::optional<Tick> completed_at;
};

struct Found {};
struct Failed {};
struct Forward {
  PeerId next;
  std::size_t entry_index = 0;
  bool revisit = false;  // every entry peer was already on the history
};

using StepDecision = std::variant<Found, Failed, Forward>;

/// One hop of guided search at the peer currently holding the query:
/// append the peer to the history, answer locally if possible, fail once the
/// history is longer than the TTL, otherwise forward to the unvisited entry
/// peer whose advertised file makes the target most probable (falling back
/// to the overall best entry when all have been visited).
StepDecision egsp_step(const PeerState& peer, Query& query, const InterestModel& model);

/// Same contract as egsp_step, but the next hop is a uniformly random
/// unvisited entry (or a uniformly random entry when all were visited).
StepDecision random_walk_step(const PeerState& peer, Query& query, Rng& rng);

/// Entry indices in greedy forwarding order: Pr(target | advertised file)
/// descending, ties by lowest peer id then file id.
std::vector<std::size_t> guided_order(const RoutingTable& table, FileId target,
                                      const InterestModel& model);

enum class SearchMethod { Guided, RandomWalk };

struct QueryResult {
  std::optional<PeerId> provider;  // set on success
  int hops = 0;                    // forwarding decisions taken
  std::vector<PeerId> history;
  std::size_t revisits = 0;        // forwards that fell back to a visited peer

  bool success() const { return provider.has_value(); }
};

/// Runs a query to completion. Each forward costs one tick starting at
/// `now`; the used routing entry is stamped with that tick. Sets
/// query.completed_at. `rng` is required for SearchMethod::RandomWalk.
/// With `stamp_entries` off the routing tables are left untouched.
QueryResult execute_query(std::span<PeerState> peers, Query& query, const InterestModel& model,
                          Tick now, SearchMethod method = SearchMethod::Guided,
                          Rng* rng = nullptr, bool stamp_entries = true);

}  // namespace p2psim
