#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <vector>

#include "oracles.hpp"
#include "p2psim/overlay.hpp"

using namespace p2psim;

namespace {

RoutingEntry entry(std::uint32_t peer, std::uint32_t file, Tick t = 0) {
  return {PeerId{peer}, FileId{file}, t};
}

// Owner peer 0 shares the fixture's owner files; entries point at peers 1..m.
RoutingTable fixture_table(const oracle::DistanceFixture& fx, std::size_t capacity) {
  RoutingTable t(capacity);
  for (std::uint32_t k = 0; k < fx.entry_files.size(); ++k)
    t.insert({PeerId{k + 1}, fx.entry_files[k], static_cast<Tick>(k)});
  return t;
}

}  // namespace

TEST_CASE("routing table insert and duplicates") {
  RoutingTable t(2);
  CHECK(t.insert(entry(1, 5, 3)));
  CHECK(t.insert(entry(2, 6, 4)));
  CHECK_FALSE(t.insert(entry(1, 5, 9)));
  CHECK(t.size() == 2);
  CHECK(t[0].last_used == 9);
  CHECK_FALSE(t.insert(entry(1, 5, 1)));
  CHECK(t[0].last_used == 9);
  CHECK(t.insert(entry(3, 7)));
  CHECK(t.over_capacity());
  CHECK(t.remove_at(0) == entry(1, 5, 9));
  CHECK(t[0].peer == PeerId{2});
  CHECK_THROWS(RoutingTable(0));
}

TEST_CASE("fixture distances are exact") {
  auto fx = oracle::distance_fixture({1.0, 2.0, 3.0, 0.0});
  for (std::size_t k = 0; k < 4; ++k) {
    double d = entry_distance(*fx.model, entry(1, fx.entry_files[k].value), fx.owner_files);
    CHECK(d == doctest::Approx(std::array{1.0, 2.0, 3.0, 0.0}[k]).epsilon(1e-12));
  }
}

TEST_CASE("distance-proportional eviction") {
  Rng rng(21);

  SUBCASE("single entry") {
    auto fx = oracle::distance_fixture({2.0});
    auto t = fixture_table(fx, 1);
    auto victim = evict_distance_proportional(t, fx.owner_files, *fx.model, 1.0, rng);
    CHECK(victim.file == fx.entry_files[0]);
    CHECK(t.empty());
  }

  SUBCASE("r = 0 is uniform") {
    std::vector<double> d{1.0, 5.0, 0.0, 3.0};
    std::vector<int> hits(4, 0);
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) ++hits[pick_distance_proportional(d, 0.0, rng)];
    for (int h : hits) CHECK(std::abs(h / double(trials) - 0.25) < 0.01);
  }

  SUBCASE("{1, 4} with r = 2 gives odds 1:16") {
    auto fx = oracle::distance_fixture({1.0, 4.0});
    const auto base = fixture_table(fx, 2);
    int first = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
      auto t = base;
      if (evict_distance_proportional(t, fx.owner_files, *fx.model, 2.0, rng).file ==
          fx.entry_files[0])
        ++first;
    }
    CHECK(std::abs(first / double(trials) - 1.0 / 17.0) < 0.01);
  }

  SUBCASE("all distances zero falls back to uniform") {
    std::vector<double> d{0.0, 0.0};
    int zero = 0;
    for (int i = 0; i < 10000; ++i) zero += pick_distance_proportional(d, 1.0, rng) == 0;
    CHECK(std::abs(zero / 10000.0 - 0.5) < 0.03);
  }

  CHECK_THROWS(pick_distance_proportional({}, 1.0, rng));
}

TEST_CASE("lru eviction") {
  RoutingTable t(3);
  t.insert(entry(1, 0, 5));
  t.insert(entry(2, 1, 2));
  t.insert(entry(4, 2, 9));
  CHECK(evict_lru(t) == entry(2, 1, 2));

  RoutingTable tie(3);
  tie.insert(entry(7, 0, 2));
  tie.insert(entry(3, 1, 2));
  tie.insert(entry(5, 2, 8));
  CHECK(evict_lru(tie).peer == PeerId{3});
}

TEST_CASE("a just-used entry survives lru unless every entry shares the tick") {
  // Every table of size 1..4 with ticks in {0..3}; entry `used` is stamped now = 3.
  for (std::size_t size = 1; size <= 4; ++size) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < size; ++i) combos *= 4;
    for (std::size_t code = 0; code < combos; ++code) {
      for (std::size_t used = 0; used < size; ++used) {
        std::vector<RoutingEntry> e;
        std::size_t c = code;
        for (std::uint32_t i = 0; i < size; ++i, c /= 4)
          e.push_back(entry(i + 1, i, static_cast<Tick>(c % 4)));
        e[used].last_used = 3;
        bool all_now = std::all_of(e.begin(), e.end(), [](auto& x) { return x.last_used == 3; });
        if (!all_now) CHECK(pick_lru(e) != used);
      }
    }
  }
}

TEST_CASE("eccr eviction") {
  // LRU victim is the entry at distance 1 (tick 0); farthest is distance 3.
  auto fx = oracle::distance_fixture({1.0, 2.0, 3.0});
  const auto base = fixture_table(fx, 3);
  Rng rng(33);

  for (int i = 0; i < 200; ++i) {
    auto a = base, b = base;
    CHECK(evict_eccr(a, fx.owner_files, *fx.model, 1.0, rng) == evict_lru(b));
    auto c = base;
    CHECK(evict_eccr(c, fx.owner_files, *fx.model, 0.0, rng).file == fx.entry_files[2]);
  }

  int lru = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    auto t = base;
    if (evict_eccr(t, fx.owner_files, *fx.model, 0.3, rng).file == fx.entry_files[0]) ++lru;
  }
  CHECK(std::abs(lru / double(trials) - 0.3) < 0.01);
}

TEST_CASE("dc eviction") {
  auto fx = oracle::distance_fixture({1.0, 2.0, 3.0});
  const auto base = fixture_table(fx, 3);
  Rng rng(44);

  for (int i = 0; i < 200; ++i) {
    auto t = base;
    CHECK(evict_dc(t, fx.owner_files, *fx.model, 1.0, rng).file == fx.entry_files[2]);
  }

  auto one = oracle::distance_fixture({2.0});
  auto single = fixture_table(one, 1);
  CHECK(evict_dc(single, one.owner_files, *one.model, 0.5, rng).file == one.entry_files[0]);

  std::map<std::uint32_t, int> hits;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    auto t = base;
    ++hits[evict_dc(t, fx.owner_files, *fx.model, 0.5, rng).file.value];
  }
  CHECK(hits[fx.entry_files[0].value] == 0);
  CHECK(std::abs(hits[fx.entry_files[1].value] / double(trials) - 0.5) < 0.01);
  CHECK(std::abs(hits[fx.entry_files[2].value] / double(trials) - 0.5) < 0.01);
}

TEST_CASE("strategy validation") {
  CHECK_NOTHROW(validate(EvictionStrategy{DistanceProportional{0.0}}));
  CHECK_THROWS(validate(EvictionStrategy{DistanceProportional{-1.0}}));
  CHECK_THROWS(validate(EvictionStrategy{Eccr{1.5}}));
  CHECK_THROWS(validate(EvictionStrategy{DistanceCentric{-0.1}}));
}

TEST_CASE("filter") {
  Rng rng(55);

  SUBCASE("fresh filter admits everything") {
    FilterState f(4, 32.0);
    for (double d : {0.0, 7.9, 16.0, 31.0, 40.0}) CHECK(f.acceptance_probability(d) == 1.0);
  }

  SUBCASE("bins") {
    FilterState f(4, 32.0);
    CHECK(f.bin_of(-1.0) == 0);
    CHECK(f.bin_of(7.99) == 0);
    CHECK(f.bin_of(8.0) == 1);
    CHECK(f.bin_of(32.0) == 3);
    CHECK(f.bin_of(100.0) == 3);
  }

  SUBCASE("density {9, 1, 0, 0}") {
    FilterState f(4, 32.0, 1.0);
    f.set_density({9, 1, 0, 0});
    CHECK(f.acceptance_probability(1.0) == doctest::Approx(0.2));
    CHECK(f.acceptance_probability(9.0) == doctest::Approx(1.0));
    CHECK(f.acceptance_probability(20.0) == doctest::Approx(1.0));
    int accepted = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
      FilterState g = f;
      accepted += g.offer(1.0, rng);
    }
    CHECK(std::abs(accepted / double(trials) - 0.2) < 0.01);
  }

  SUBCASE("rejection leaves the accepted histogram alone") {
    FilterState f(4, 32.0, 1.0);
    f.set_density({50, 1, 0, 0});
    for (int i = 0; i < 200; ++i) {
      auto before = std::vector<double>(f.accepted().begin(), f.accepted().end());
      bool ok = f.offer(1.0, rng);
      auto after = std::vector<double>(f.accepted().begin(), f.accepted().end());
      if (!ok) CHECK(before == after);
      else CHECK(after[0] == before[0] + 1.0);
    }
  }

  SUBCASE("two-bin stream is accepted evenly") {
    FilterState f(4, 32.0);
    for (int i = 0; i < 10000; ++i) f.offer(rng.bernoulli(0.8) ? 3.0 : 11.0, rng);
    double ratio = f.accepted()[0] / f.accepted()[1];
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);
    CHECK(f.accepted()[2] == 0.0);
  }

  CHECK_THROWS(FilterState(0));
  CHECK_THROWS(FilterState(4, 32.0, 0.0));
  FilterState f(4);
  CHECK_THROWS(f.set_density({1, 2}));
}

TEST_CASE("urtp") {
  // Peer 0 owns the fixture's owner files, peers 1..3 share entry files, peer
  // 4 is the provider sharing the distance-0 file.
  auto fx = oracle::distance_fixture({1.0, 2.0, 3.0, 0.0});
  auto make_peers = [&](std::size_t capacity) {
    std::vector<PeerState> peers;
    peers.push_back({PeerId{0}, fx.owner_files, RoutingTable(capacity), std::nullopt});
    for (std::uint32_t k = 0; k < 4; ++k)
      peers.push_back({PeerId{k + 1}, {fx.entry_files[k]}, RoutingTable(capacity), std::nullopt});
    for (std::uint32_t k = 0; k < 3; ++k) peers[0].routing_table.insert(entry(k + 1, fx.entry_files[k].value));
    return peers;
  };
  const PeerId provider{4};
  const FileId file = fx.entry_files[3];
  std::vector<PeerId> history{PeerId{0}, PeerId{1}, provider};
  Rng rng(66);

  SUBCASE("free slots mean no eviction") {
    auto peers = make_peers(5);
    auto out = urtp_apply(peers, history, provider, file, DistanceProportional{1.0}, *fx.model, rng, 7);
    CHECK(out.evictions.empty());
    CHECK(out.inserted == 2);
    CHECK(peers[0].routing_table.find(provider, file));
    CHECK(peers[1].routing_table.find(provider, file));
    CHECK_FALSE(peers[4].routing_table.find(provider, file));
  }

  SUBCASE("full table evicts in proportion to distance") {
    const auto base = make_peers(3);
    std::vector<PeerId> only_owner{PeerId{0}, provider};
    std::map<std::uint32_t, int> hits;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
      auto peers = base;
      auto out = urtp_apply(peers, only_owner, provider, file, DistanceProportional{1.0}, *fx.model, rng, 1);
      REQUIRE(out.evictions.size() == 1);
      CHECK(peers[0].routing_table.size() == 3);
      ++hits[out.evictions[0].entry.file.value];
    }
    CHECK(std::abs(hits[fx.entry_files[0].value] / double(trials) - 1.0 / 6) < 0.01);
    CHECK(std::abs(hits[fx.entry_files[1].value] / double(trials) - 2.0 / 6) < 0.01);
    CHECK(std::abs(hits[fx.entry_files[2].value] / double(trials) - 3.0 / 6) < 0.01);
    CHECK(hits[file.value] == 0);
  }

  SUBCASE("known entry is only refreshed") {
    auto peers = make_peers(4);
    peers[0].routing_table.insert({provider, file, 2});
    auto before = peers[0].routing_table;
    auto out = urtp_apply(peers, std::vector<PeerId>{PeerId{0}}, provider, file, LeastRecentlyUsed{},
                          *fx.model, rng, 9);
    CHECK(out.refreshed == 1);
    CHECK(out.inserted == 0);
    auto idx = peers[0].routing_table.find(provider, file);
    REQUIRE(idx);
    CHECK(peers[0].routing_table[*idx].last_used == 9);
    CHECK(peers[0].routing_table.size() == before.size());
  }

  SUBCASE("provider must share the file") {
    auto peers = make_peers(3);
    CHECK_THROWS_AS(urtp_apply(peers, history, PeerId{1}, file, LeastRecentlyUsed{}, *fx.model, rng, 0),
                    std::invalid_argument);
  }

  SUBCASE("tables never exceed capacity") {
    for (auto strategy : {EvictionStrategy{DistanceProportional{2.0}}, EvictionStrategy{LeastRecentlyUsed{}},
                          EvictionStrategy{Eccr{0.5}}, EvictionStrategy{DistanceCentric{0.5}}}) {
      auto peers = make_peers(2);
      for (auto& p : peers) p.routing_table = RoutingTable(2);
      for (int step = 0; step < 300; ++step) {
        std::uint32_t prov = 1 + static_cast<std::uint32_t>(rng.below(4));
        std::vector<PeerId> h;
        for (int k = 0; k < 4; ++k) h.push_back(PeerId{static_cast<std::uint32_t>(rng.below(5))});
        h.push_back(PeerId{prov});
        urtp_apply(peers, h, PeerId{prov}, peers[prov].shared_files[0], strategy, *fx.model, rng, step);
        for (auto& p : peers) CHECK(p.routing_table.size() <= 2);
      }
    }
  }
}
