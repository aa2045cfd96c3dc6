#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "p2psim/config.hpp"
#include "p2psim/runner.hpp"

using namespace p2psim;
namespace fs = std::filesystem;

namespace {

const char* kSmall =
    "peer_count = 40\n"
    "catalog_size = 24\n"
    "cluster_count = 4\n"
    "files_per_peer = 3\n"
    "table_capacity = 5\n"
    "ttl = 10\n"
    "batch_sizes = 20, 40\n"
    "path_samples = 200\n"
    "replicas = 2\n";

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("p2psim_runner_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  auto p = dir / "in.conf";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("modes") {
  auto modes = parse_modes("static,urtp+filter");
  CHECK(modes == std::vector<std::string>{"static", "urtp+filter"});
  CHECK_THROWS_AS(parse_modes("static,static"), ConfigError);
  CHECK_THROWS_AS(parse_modes("fast"), ConfigError);
  CHECK_THROWS_AS(parse_modes(""), ConfigError);

  auto base = parse_config(kSmall);
  CHECK_FALSE(apply_mode(base, "static").routing_updates);
  CHECK(apply_mode(base, "urtp+filter").filtering);
  CHECK(apply_mode(base, "lru").eviction == EvictionKind::Lru);
  CHECK(apply_mode(base, "random-walk").search == SearchMethod::RandomWalk);
  CHECK(replica_seed(10, 3) == 13);
}

TEST_CASE("run_mode gives one series per replica") {
  auto base = parse_config(kSmall);
  ReplicaAudit audit;
  auto series = run_mode(base, "urtp", &audit);
  REQUIRE(series.size() == 2);
  CHECK(series[0].seed == base.seed);
  CHECK(series[1].seed == base.seed + 1);
  CHECK(series[1].replica == 1);
  CHECK(series[0].fingerprint == config_fingerprint(base));
  CHECK(audit.queries == 2 * 60);
  CHECK(audit.unsound_successes == 0);
}

TEST_CASE("run writes the output tree") {
  auto dir = scratch("static");
  auto cfg = write_config(dir, kSmall);
  auto before = slurp(cfg);
  RunSpec spec{cfg.string(), (dir / "out").string(), std::nullopt, std::nullopt, {"static"}};
  std::ostringstream log;
  REQUIRE(run(spec, log) == kExitOk);
  auto files = tree(dir / "out");
  std::size_t csvs = 0;
  for (auto& [name, _] : files) csvs += name.ends_with(".csv");
  CHECK(csvs == 2);
  CHECK(files.count("static.csv"));
  CHECK(files.count("comparison.csv"));
  CHECK(slurp(cfg) == before);

  // Same spec again: same bytes.
  RunSpec again = spec;
  again.output_dir = (dir / "out2").string();
  REQUIRE(run(again, log) == kExitOk);
  CHECK(tree(dir / "out2") == files);

  // The effective configuration parses back to the input.
  CHECK(parse_config(files["config.txt"]) == parse_config(kSmall));
}

TEST_CASE("seed override changes output") {
  auto dir = scratch("seed");
  auto cfg = write_config(dir, kSmall);
  std::ostringstream log;
  RunSpec a{cfg.string(), (dir / "a").string(), std::nullopt, 1, {"urtp"}};
  RunSpec b{cfg.string(), (dir / "b").string(), 5, 1, {"urtp"}};
  REQUIRE(run(a, log) == kExitOk);
  REQUIRE(run(b, log) == kExitOk);
  CHECK(slurp(dir / "a" / "urtp.csv") != slurp(dir / "b" / "urtp.csv"));
}

TEST_CASE("error exits") {
  auto dir = scratch("errors");
  std::ostringstream log;
  RunSpec missing{(dir / "nope.conf").string(), (dir / "out").string(), std::nullopt, std::nullopt, {"static"}};
  CHECK(run(missing, log) == kExitConfigError);

  auto bad = write_config(dir, std::string(kSmall) + "query_locality = 2\n");
  RunSpec invalid{bad.string(), (dir / "out").string(), std::nullopt, std::nullopt, {"static"}};
  CHECK(run(invalid, log) == kExitConfigError);
  CHECK(log.str().find("query_locality") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  std::ostringstream out, err;
  CHECK(validate_config_file(bad.string(), out, err) == kExitConfigError);
  auto good = write_config(dir, kSmall);
  CHECK(validate_config_file(good.string(), out, err) == kExitOk);
}

TEST_CASE("reference config parses") {
  std::ifstream in(std::string(P2PSIM_CONFIG_DIR) + "/reference.conf");
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  auto c = parse_config(text);
  CHECK(c.peer_count == 500);
  CHECK(c.table_capacity == 20);
  CHECK(c.ttl == 64);
  CHECK(c.replicas == 5);
}
