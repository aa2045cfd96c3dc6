#include "p2psim/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace p2psim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Line {
  std::string value;
  std::size_t number;
};

std::uint64_t parse_unsigned(const std::string& key, const Line& l) {
  std::uint64_t v = 0;
  const auto* end = l.value.data() + l.value.size();
  const auto [ptr, ec] = std::from_chars(l.value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key, l.number, "expected a non-negative integer, got '" + l.value + "'");
  }
  return v;
}

double parse_real(const std::string& key, const Line& l) {
  double v = 0.0;
  const auto* end = l.value.data() + l.value.size();
  const auto [ptr, ec] = std::from_chars(l.value.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key, l.number, "expected a number, got '" + l.value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const Line& l) {
  if (l.value == "true") return true;
  if (l.value == "false") return false;
  throw ConfigError(key, l.number, "expected true or false, got '" + l.value + "'");
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* eviction_name(EvictionKind k) {
  switch (k) {
    case EvictionKind::DistanceProportional:
      return "distance";
    case EvictionKind::Lru:
      return "lru";
    case EvictionKind::Eccr:
      return "eccr";
    case EvictionKind::DistanceCentric:
      return "dc";
  }
  return "distance";
}

const std::set<std::string>& required_keys() {
  static const std::set<std::string> keys = {"peer_count",     "catalog_size", "cluster_count",
                                             "files_per_peer", "table_capacity", "ttl",
                                             "batch_sizes"};
  return keys;
}

using Setter = std::function<void(SimConfig&, const std::string&, const Line&)>;

const std::map<std::string, Setter>& setters() {
  auto size = [](std::size_t SimConfig::*field) -> Setter {
    return [field](SimConfig& c, const std::string& k, const Line& l) {
      c.*field = static_cast<std::size_t>(parse_unsigned(k, l));
    };
  };
  auto real = [](double SimConfig::*field) -> Setter {
    return [field](SimConfig& c, const std::string& k, const Line& l) { c.*field = parse_real(k, l); };
  };
  auto flag = [](bool SimConfig::*field) -> Setter {
    return [field](SimConfig& c, const std::string& k, const Line& l) { c.*field = parse_bool(k, l); };
  };
  static const std::map<std::string, Setter> table = {
      {"peer_count", size(&SimConfig::peer_count)},
      {"catalog_size", size(&SimConfig::catalog_size)},
      {"cluster_count", size(&SimConfig::cluster_count)},
      {"topics_per_cluster", size(&SimConfig::topics_per_cluster)},
      {"files_per_peer", size(&SimConfig::files_per_peer)},
      {"table_capacity", size(&SimConfig::table_capacity)},
      {"ttl",
       [](SimConfig& c, const std::string& k, const Line& l) {
         const auto v = parse_unsigned(k, l);
         if (v > 1'000'000) throw ConfigError(k, l.number, "is unreasonably large");
         c.ttl = static_cast<int>(v);
       }},
      {"batch_sizes",
       [](SimConfig& c, const std::string& k, const Line& l) {
         c.batch_sizes.clear();
         std::string_view rest = l.value;
         while (true) {
           const auto comma = rest.find(',');
           const Line item{std::string(trim(rest.substr(0, comma))), l.number};
           c.batch_sizes.push_back(static_cast<std::size_t>(parse_unsigned(k, item)));
           if (comma == std::string_view::npos) break;
           rest.remove_prefix(comma + 1);
         }
       }},
      {"query_locality", real(&SimConfig::query_locality)},
      {"home_bias", real(&SimConfig::home_bias)},
      {"search",
       [](SimConfig& c, const std::string& k, const Line& l) {
         if (l.value == "guided") {
           c.search = SearchMethod::Guided;
         } else if (l.value == "random_walk") {
           c.search = SearchMethod::RandomWalk;
         } else {
           throw ConfigError(k, l.number, "expected guided or random_walk");
         }
       }},
      {"routing_updates", flag(&SimConfig::routing_updates)},
      {"filtering", flag(&SimConfig::filtering)},
      {"eviction",
       [](SimConfig& c, const std::string& k, const Line& l) {
         for (auto kind : {EvictionKind::DistanceProportional, EvictionKind::Lru,
                           EvictionKind::Eccr, EvictionKind::DistanceCentric}) {
           if (l.value == eviction_name(kind)) {
             c.eviction = kind;
             return;
           }
         }
         throw ConfigError(k, l.number, "expected distance, lru, eccr or dc");
       }},
      {"r", real(&SimConfig::r)},
      {"pr_e", real(&SimConfig::pr_e)},
      {"pr_d", real(&SimConfig::pr_d)},
      {"filter_bins", size(&SimConfig::filter_bins)},
      {"filter_decay", real(&SimConfig::filter_decay)},
      {"max_distance", real(&SimConfig::max_distance)},
      {"training_pairs", size(&SimConfig::training_pairs)},
      {"train_step",
       [](SimConfig& c, const std::string& k, const Line& l) { c.training.step_size = parse_real(k, l); }},
      {"train_iterations",
       [](SimConfig& c, const std::string& k, const Line& l) {
         const auto v = parse_unsigned(k, l);
         if (v > 10'000'000) throw ConfigError(k, l.number, "is unreasonably large");
         c.training.max_iterations = static_cast<int>(v);
       }},
      {"train_l2",
       [](SimConfig& c, const std::string& k, const Line& l) { c.training.l2_penalty = parse_real(k, l); }},
      {"path_samples", size(&SimConfig::path_samples)},
      {"seed",
       [](SimConfig& c, const std::string& k, const Line& l) { c.seed = parse_unsigned(k, l); }},
      {"replicas", size(&SimConfig::replicas)},
  };
  return table;
}

// Maps a validation failure back to the line that set the key.
[[noreturn]] void rethrow_with_line(const ConfigError& e, const std::map<std::string, std::size_t>& lines) {
  const auto it = lines.find(e.key());
  std::string message = e.what();
  const auto colon = message.find(": ");
  if (colon != std::string::npos) message = message.substr(colon + 2);
  throw ConfigError(e.key(), it == lines.end() ? 0 : it->second, message);
}

}  // namespace

SimConfig parse_config(std::string_view text) {
  SimConfig config;
  std::map<std::string, std::size_t> seen;
  bool has_features = false;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(raw), number, "expected 'key = value'");
    }
    const std::string key(trim(raw.substr(0, eq)));
    const Line line{std::string(trim(raw.substr(eq + 1))), number};
    if (line.value.empty()) throw ConfigError(key, number, "missing value");

    if (key == "feature") {
      if (!has_features) config.features.clear();
      has_features = true;
      try {
        config.features.push_back(parse_feature(line.value, static_cast<int>(config.features.size())));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(key, number, e.what());
      }
      seen.emplace(key, number);
      continue;
    }
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, number, "unknown key");
    if (!seen.emplace(key, number).second) {
      throw ConfigError(key, number, "duplicate key (first set on line " +
                                         std::to_string(seen[key]) + ")");
    }
    it->second(config, key, line);
  }
  for (const auto& key : required_keys()) {
    if (!seen.count(key)) throw ConfigError(key, 0, "missing required key");
  }
  if (!has_features) config.features = default_features();
  try {
    validate(config);
  } catch (const ConfigError& e) {
    rethrow_with_line(e, seen);
  }
  return config;
}

namespace {

void write_body(std::ostringstream& out, const SimConfig& c) {
  out << "peer_count = " << c.peer_count << '\n'
      << "catalog_size = " << c.catalog_size << '\n'
      << "cluster_count = " << c.cluster_count << '\n'
      << "topics_per_cluster = " << c.topics_per_cluster << '\n'
      << "files_per_peer = " << c.files_per_peer << '\n'
      << "table_capacity = " << c.table_capacity << '\n'
      << "ttl = " << c.ttl << '\n'
      << "batch_sizes = ";
  for (std::size_t i = 0; i < c.batch_sizes.size(); ++i) out << (i ? ", " : "") << c.batch_sizes[i];
  out << '\n'
      << "query_locality = " << real_text(c.query_locality) << '\n'
      << "home_bias = " << real_text(c.home_bias) << '\n'
      << "search = " << (c.search == SearchMethod::Guided ? "guided" : "random_walk") << '\n'
      << "routing_updates = " << (c.routing_updates ? "true" : "false") << '\n'
      << "filtering = " << (c.filtering ? "true" : "false") << '\n'
      << "eviction = " << eviction_name(c.eviction) << '\n'
      << "r = " << real_text(c.r) << '\n'
      << "pr_e = " << real_text(c.pr_e) << '\n'
      << "pr_d = " << real_text(c.pr_d) << '\n'
      << "filter_bins = " << c.filter_bins << '\n'
      << "filter_decay = " << real_text(c.filter_decay) << '\n'
      << "max_distance = " << real_text(c.max_distance) << '\n'
      << "training_pairs = " << c.training_pairs << '\n'
      << "train_step = " << real_text(c.training.step_size) << '\n'
      << "train_iterations = " << c.training.max_iterations << '\n'
      << "train_l2 = " << real_text(c.training.l2_penalty) << '\n'
      << "path_samples = " << c.path_samples << '\n';
  for (const auto& f : c.features) out << "feature = " << f.to_string() << '\n';
}

}  // namespace

std::string serialize_config(const SimConfig& config) {
  std::ostringstream out;
  write_body(out, config);
  out << "seed = " << config.seed << '\n' << "replicas = " << config.replicas << '\n';
  return out.str();
}

std::string config_fingerprint(const SimConfig& config) {
  std::ostringstream out;
  write_body(out, config);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : out.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace p2psim
