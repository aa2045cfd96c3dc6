#include "p2psim/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "p2psim/config.hpp"

namespace p2psim {

SimConfig apply_mode(SimConfig config, const std::string& mode) {
  config.search = SearchMethod::Guided;
  config.routing_updates = true;
  config.filtering = false;
  config.eviction = EvictionKind::DistanceProportional;
  if (mode == "static") {
    config.routing_updates = false;
  } else if (mode == "urtp") {
  } else if (mode == "urtp+filter") {
    config.filtering = true;
  } else if (mode == "lru") {
    config.eviction = EvictionKind::Lru;
  } else if (mode == "eccr") {
    config.eviction = EvictionKind::Eccr;
  } else if (mode == "dc") {
    config.eviction = EvictionKind::DistanceCentric;
  } else if (mode == "random-walk") {
    config.search = SearchMethod::RandomWalk;
    config.routing_updates = false;
  } else {
    throw ConfigError("modes", 0, "unknown mode '" + mode + "'");
  }
  return config;
}

std::vector<std::string> parse_modes(const std::string& text) {
  std::vector<std::string> modes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (std::find(std::begin(kModeNames), std::end(kModeNames), item) == std::end(kModeNames)) {
      throw ConfigError("modes", 0, "unknown mode '" + item + "'");
    }
    if (std::find(modes.begin(), modes.end(), item) != modes.end()) {
      throw ConfigError("modes", 0, "mode '" + item + "' listed twice");
    }
    modes.push_back(item);
  }
  if (modes.empty()) throw ConfigError("modes", 0, "select at least one mode");
  return modes;
}

std::vector<MetricsSeries> run_mode(const SimConfig& base, const std::string& mode,
                                    ReplicaAudit* audit) {
  const SimConfig config = apply_mode(base, mode);
  validate(config);
  const std::string fingerprint = config_fingerprint(base);
  const auto replicas = static_cast<std::int64_t>(config.replicas);
  std::vector<MetricsSeries> out(config.replicas);
  std::vector<ExperimentAudit> audits(config.replicas);
  std::vector<std::string> errors(config.replicas);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < replicas; ++k) {
    try {
      SimConfig c = config;
      c.seed = replica_seed(base.seed, static_cast<std::size_t>(k));
      out[k] = run_experiment(c, mode, &audits[k]);
      out[k].replica = static_cast<std::size_t>(k);
      out[k].fingerprint = fingerprint;
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("mode " + mode + ": " + e);
  }
  if (audit) {
    for (const auto& a : audits) {
      audit->queries += a.queries;
      audit->unsound_successes += a.unsound_successes;
      audit->ttl_overruns += a.ttl_overruns;
      audit->phantom_entries += a.phantom_entries;
      audit->nop_mismatches += a.nop_mismatches;
    }
  }
  return out;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", 0, "cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace

int run(const RunSpec& spec, std::ostream& log) {
  SimConfig config;
  std::vector<std::string> modes;
  try {
    config = parse_config(read_file(spec.config_path));
    if (spec.seed) config.seed = *spec.seed;
    if (spec.replicas) config.replicas = *spec.replicas;
    validate(config);
    if (spec.modes.empty()) throw ConfigError("modes", 0, "select at least one mode");
    modes = spec.modes;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    const std::filesystem::path dir(spec.output_dir);
    std::filesystem::create_directories(dir);
    const std::string fingerprint = config_fingerprint(config);
    std::vector<MetricsSeries> all;
    for (const auto& mode : modes) {
      auto series = run_mode(config, mode);
      std::ostringstream csv;
      write_csv(series, csv, config.filter_bins);
      write_text(dir / (mode + ".csv"), csv.str());
      log << mode << ": final success rate";
      for (const auto& s : series) log << ' ' << s.batches.back().success_rate;
      log << '\n';
      all.insert(all.end(), series.begin(), series.end());
    }
    std::ostringstream comparison;
    write_comparison(all, config.seed, fingerprint, comparison);
    write_text(dir / "comparison.csv", comparison.str());
    std::ostringstream svg;
    write_svg(all, config.seed, fingerprint, svg);
    write_text(dir / "success_rate.svg", svg.str());
    write_text(dir / "config.txt",
               "# fingerprint " + fingerprint + "\n" + serialize_config(config));
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
  return kExitOk;
}

int validate_config_file(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    const auto config = parse_config(read_file(path));
    out << "# fingerprint " << config_fingerprint(config) << '\n' << serialize_config(config);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace p2psim
