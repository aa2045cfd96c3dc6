#pragma once

// Text configuration: one `key = value` per line, `#` starts a comment.
// `feature` may repeat; every other key appears at most once. Lists are
// comma separated. Example:
//
//   peer_count = 500
//   catalog_size = 200
//   batch_sizes = 50, 100, 150
//   feature = same(cluster)
//   feature = same(topic) & source(cluster=c0)

#include <string>
#include <string_view>

#include "p2psim/sim.hpp"

namespace p2psim {

/// Parses and validates a configuration. Omitted optional keys take their
/// defaults; no `feature` line at all means default_features(). Throws
/// ConfigError with the key and line of the first problem.
SimConfig parse_config(std::string_view text);

/// Canonical text form listing every key, defaults included. Round-trips:
/// parse_config(serialize_config(c)) == c.
std::string serialize_config(const SimConfig& config);

/// 16 hex digits of FNV-1a over the canonical form, seed and replica
/// count excluded so replicas and seed overrides share one fingerprint.
std::string config_fingerprint(const SimConfig& config);

}  // namespace p2psim
