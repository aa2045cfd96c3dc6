#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "oracles.hpp"
#include "p2psim/uim.hpp"

using namespace p2psim;

namespace {

std::shared_ptr<const Catalog> genre_catalog(std::vector<const char*> genres) {
  std::vector<FileRecord> files;
  for (std::uint32_t i = 0; i < genres.size(); ++i)
    files.push_back({FileId{i}, {{"genre", genres[i]}}});
  return std::make_shared<const Catalog>(std::move(files));
}

// {f1:rock, f2:rock, f3:jazz} with "same genre" at weight 1.
InterestModel three_file_model() {
  return InterestModel(genre_catalog({"rock", "rock", "jazz"}), {parse_feature("same(genre)")},
                       {1.0});
}

}  // namespace

TEST_CASE("catalog rejects malformed input") {
  CHECK_THROWS_AS(Catalog({}), std::invalid_argument);
  CHECK_THROWS_AS(Catalog({{FileId{1}, {{"a", "b"}}}}), std::invalid_argument);
  CHECK_THROWS_AS(Catalog({{FileId{0}, {}}}), std::invalid_argument);
}

TEST_CASE("feature parsing") {
  auto f = parse_feature("same(cluster) & source(genre=rock) & target(decade=80s)", 3);
  CHECK(f.id == 3);
  REQUIRE(f.clauses.size() == 3);
  CHECK(f.clauses[1].kind == FeatureClause::Kind::SourceEquals);
  CHECK(f.clauses[2].value == "80s");
  CHECK(parse_feature(f.to_string(), 3) == f);
  CHECK_THROWS_AS(parse_feature(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_feature("same(genre"), std::invalid_argument);
  CHECK_THROWS_AS(parse_feature("target(genre)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_feature("like(genre)"), std::invalid_argument);
}

TEST_CASE("same-value feature") {
  FileRecord rock1{FileId{0}, {{"genre", "rock"}}};
  FileRecord rock2{FileId{1}, {{"genre", "rock"}}};
  FileRecord jazz{FileId{2}, {{"genre", "jazz"}}};
  FileRecord bare{FileId{3}, {{"name", "x"}}};
  auto same = parse_feature("same(genre)");
  CHECK(evaluate_feature(same, rock1, rock2) == 1);
  CHECK(evaluate_feature(same, rock1, jazz) == 0);
  CHECK(evaluate_feature(same, bare, bare) == 0);
}

TEST_CASE("conjunction truth table") {
  FileRecord rock{FileId{0}, {{"genre", "rock"}}};
  FileRecord jazz{FileId{1}, {{"genre", "jazz"}}};
  auto both = parse_feature("source(genre=rock) & target(genre=rock)");
  const FileRecord* g[] = {&rock, &jazz};
  for (auto* target : g)
    for (auto* source : g) {
      int expected = (target == &rock && source == &rock) ? 1 : 0;
      CHECK(evaluate_feature(both, *target, *source) == expected);
    }
  CHECK(evaluate_feature(both, jazz, rock) == 0);
}

TEST_CASE("partition function examples") {
  auto zero = InterestModel(genre_catalog({"a", "b", "c", "d", "e"}), {parse_feature("same(genre)")});
  CHECK(zero.partition_function(FileId{0}) == doctest::Approx(5.0));

  auto m = three_file_model();
  CHECK(oracle::partition(m, FileId{0}) == doctest::Approx(5.0));
  CHECK(m.partition_function(FileId{0}) == doctest::Approx(oracle::partition(m, FileId{0})));

  // Both features fire only for f_j = file 2 when conditioning on file 0.
  auto cat = genre_catalog({"rock", "pop", "jazz", "pop", "pop"});
  InterestModel two(cat,
                    {parse_feature("target(genre=jazz)"), parse_feature("target(genre=jazz) & source(genre=rock)")},
                    {1.0, 2.0});
  CHECK(two.partition_function(FileId{0}) == doctest::Approx(8.0 + 4.0));
  CHECK(two.partition_function(FileId{0}) == doctest::Approx(oracle::partition(two, FileId{0})));
}

TEST_CASE("conditional probability examples") {
  auto uniform = InterestModel(genre_catalog({"a", "b", "c", "d"}), {});
  for (std::uint32_t i = 0; i < 4; ++i)
    for (std::uint32_t j = 0; j < 4; ++j)
      CHECK(uniform.conditional_probability(FileId{j}, FileId{i}) == doctest::Approx(0.25));

  auto m = three_file_model();
  CHECK(m.conditional_probability(FileId{1}, FileId{0}) == doctest::Approx(0.4));
  CHECK(m.conditional_probability(FileId{2}, FileId{0}) == doctest::Approx(0.2));
  CHECK(m.conditional_probability(FileId{1}, FileId{0}) ==
        doctest::Approx(oracle::probability(m, FileId{1}, FileId{0})));
}

TEST_CASE("weights outside the representable range") {
  auto cat = genre_catalog({"rock", "rock"});
  InterestModel huge(cat, {parse_feature("same(genre)")}, {2000.0});
  CHECK_THROWS_AS(huge.partition_function(FileId{0}), ModelRangeError);
  CHECK_THROWS_AS(huge.conditional_probability(FileId{0}, FileId{1}), ModelRangeError);
  CHECK(std::isfinite(huge.log2_partition(FileId{0})));
  CHECK(huge.file_distance(FileId{1}, FileId{0}) == doctest::Approx(1.0));

  InterestModel tiny(cat, {parse_feature("same(genre)")}, {-2000.0});
  CHECK_THROWS_AS(tiny.partition_function(FileId{0}), ModelRangeError);
}

TEST_CASE("column normalization property") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    auto r = oracle::random_model(rng, 30, 8, 4.0);
    InterestModel m(r.catalog, r.features, r.weights);
    for (std::uint32_t i = 0; i < m.catalog().size(); ++i) {
      double sum = 0.0;
      for (std::uint32_t j = 0; j < m.catalog().size(); ++j) {
        double p = m.conditional_probability(FileId{j}, FileId{i});
        CHECK(p > 0.0);
        sum += p;
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("raising a firing feature's weight raises the probability") {
  auto cat = genre_catalog({"rock", "rock", "jazz", "pop"});
  double previous = 0.0;
  for (double w : {-2.0, -1.0, 0.0, 0.5, 1.0, 3.0}) {
    InterestModel m(cat, {parse_feature("same(genre)")}, {w});
    double p = m.conditional_probability(FileId{1}, FileId{0});
    CHECK(p > previous);
    previous = p;
  }
}

TEST_CASE("log likelihood examples") {
  auto uniform = InterestModel(genre_catalog({"a", "b", "c", "d"}), {});
  std::vector<TrainingPair> one{{FileId{0}, FileId{1}}};
  CHECK(log_likelihood(uniform, one) == doctest::Approx(-2.0));

  auto m = three_file_model();
  std::vector<TrainingPair> pair{{FileId{0}, FileId{1}}};
  std::vector<TrainingPair> twice{{FileId{0}, FileId{1}}, {FileId{0}, FileId{1}}};
  CHECK(log_likelihood(m, pair) == doctest::Approx(std::log2(0.4)));
  CHECK(log_likelihood(m, pair) == doctest::Approx(-1.3219).epsilon(1e-4));
  CHECK(log_likelihood(m, twice) == 2.0 * log_likelihood(m, pair));

  CHECK_THROWS_AS(log_likelihood(m, std::vector<TrainingPair>{}), std::invalid_argument);
  CHECK_THROWS_AS(log_likelihood(m, std::vector<TrainingPair>{{FileId{0}, FileId{9}}}),
                  std::invalid_argument);
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto r = oracle::random_model(rng, 12, 5, 2.0);
    if (r.features.empty()) continue;
    InterestModel m(r.catalog, r.features, r.weights);
    std::vector<TrainingPair> pairs;
    for (int k = 0; k < 15; ++k)
      pairs.push_back({FileId{static_cast<std::uint32_t>(rng.below(m.catalog().size()))},
                       FileId{static_cast<std::uint32_t>(rng.below(m.catalog().size()))}});
    auto grad = objective_gradient(m, pairs, 0.01);
    for (std::size_t h = 0; h < grad.size(); ++h) {
      auto up = r.weights, down = r.weights;
      up[h] += 1e-5;
      down[h] -= 1e-5;
      double fd = (oracle::objective(m.with_weights(up), pairs, 0.01) -
                   oracle::objective(m.with_weights(down), pairs, 0.01)) / 2e-5;
      CHECK(std::abs(grad[h] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("training") {
  // Co-shared files always share a genre.
  auto cat = genre_catalog({"rock", "rock", "jazz", "jazz", "pop", "pop"});
  InterestModel m(cat, {parse_feature("same(genre)")});
  std::vector<TrainingPair> pairs;
  for (std::uint32_t i = 0; i < 6; ++i) pairs.push_back({FileId{i}, FileId{i ^ 1u}});

  CHECK(objective_gradient(m, pairs, 0.01)[0] > 0.0);
  TrainingReport report;
  auto trained = train_weights(m, pairs, {0.5, 200, 0.01}, &report);
  CHECK(trained.weights()[0] > 0.0);
  CHECK(report.final_objective >= report.initial_objective);
  CHECK(report.final_objective == doctest::Approx(training_objective(trained, pairs, 0.01)));

  SUBCASE("no features") {
    InterestModel bare(cat, {});
    TrainingReport r;
    auto same = train_weights(bare, pairs, {}, &r);
    CHECK(same.weights().empty());
    CHECK(r.final_objective == r.initial_objective);
  }

  SUBCASE("strictly concave objective: starting points agree") {
    auto from_high = train_weights(m.with_weights({5.0}), pairs, {0.5, 2000, 0.01});
    auto from_low = train_weights(m.with_weights({-5.0}), pairs, {0.5, 2000, 0.01});
    CHECK(from_high.weights()[0] == doctest::Approx(from_low.weights()[0]).epsilon(1e-4));
  }

  SUBCASE("invalid options") {
    CHECK_THROWS(train_weights(m, pairs, {-1.0, 10, 0.0}));
    CHECK_THROWS(train_weights(m, pairs, {0.1, 10, -1.0}));
  }
}

TEST_CASE("file distance") {
  auto m = three_file_model();
  CHECK(m.file_distance(FileId{1}, FileId{0}) == doctest::Approx(-std::log2(0.4)));
  CHECK(m.file_distance(FileId{1}, FileId{0}) == doctest::Approx(1.3219).epsilon(1e-4));

  auto single = InterestModel(genre_catalog({"rock"}), {});
  CHECK(single.file_distance(FileId{0}, FileId{0}) == 0.0);

  auto cat = genre_catalog({"rock", "jazz"});
  InterestModel far(cat, {parse_feature("same(genre)")}, {200.0});
  CHECK(far.file_distance(FileId{1}, FileId{0}) == kDefaultMaxDistance);
}

TEST_CASE("peer distance") {
  auto m = three_file_model();
  std::vector<FileId> f1{FileId{0}};
  // Column of file 0 is {0.4, 0.4, 0.2}; the self entry is one of the maxima.
  CHECK(peer_distance(m, f1, f1) == doctest::Approx(-std::log2(0.4)));

  std::vector<FileId> rock{FileId{0}, FileId{1}};
  std::vector<FileId> jazz{FileId{2}};
  double brute = 1e9;
  for (auto a : jazz)
    for (auto b : rock) brute = std::min(brute, -std::log2(oracle::probability(m, a, b)));
  CHECK(peer_distance(m, jazz, rock) == doctest::Approx(brute));
  CHECK(peer_distance(m, jazz, rock) == doctest::Approx(-std::log2(0.2)));

  auto single = InterestModel(genre_catalog({"rock"}), {});
  std::vector<FileId> only{FileId{0}};
  CHECK(peer_distance(single, only, only) == 0.0);

  CHECK_THROWS_AS(peer_distance(m, std::vector<FileId>{}, rock), std::domain_error);
  CHECK_THROWS_AS(peer_distance(m, rock, std::vector<FileId>{}), std::domain_error);
}
