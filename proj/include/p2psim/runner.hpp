#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "p2psim/metrics.hpp"
#include "p2psim/sim.hpp"

namespace p2psim {

/// Names accepted by --modes, in canonical order.
inline constexpr const char* kModeNames[] = {"static", "urtp", "urtp+filter", "lru",
                                             "eccr",   "dc",   "random-walk"};

/// Throws ConfigError("modes") on an unknown name.
SimConfig apply_mode(SimConfig config, const std::string& mode);

/// Splits "a,b,c", rejecting unknown or duplicate names and empty lists.
std::vector<std::string> parse_modes(const std::string& text);

/// Seed of replica k: the base seed plus k.
inline std::uint64_t replica_seed(std::uint64_t base, std::size_t replica) { return base + replica; }

struct ReplicaAudit {
  std::size_t queries = 0;
  std::size_t unsound_successes = 0;
  std::size_t ttl_overruns = 0;
  std::size_t phantom_entries = 0;
  std::size_t nop_mismatches = 0;
};

/// Runs every replica of one mode (replicas execute concurrently, each on
/// its own network) and returns their series in replica order.
std::vector<MetricsSeries> run_mode(const SimConfig& config, const std::string& mode,
                                    ReplicaAudit* audit = nullptr);

struct RunSpec {
  std::string config_path;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::vector<std::string> modes{"static", "urtp", "urtp+filter"};
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

/// Executes the selected modes and writes <mode>.csv for each, plus
/// comparison.csv, success_rate.svg and config.txt (the effective
/// configuration with defaults) into the output directory.
int run(const RunSpec& spec, std::ostream& log);

/// Parses and echoes a configuration; returns kExitConfigError if invalid.
int validate_config_file(const std::string& path, std::ostream& out, std::ostream& err);

}  // namespace p2psim
