#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "p2psim/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Interest-guided peer-to-peer search simulator"};
  app.require_subcommand(1);

  p2psim::RunSpec spec;
  std::string modes = "static,urtp,urtp+filter";
  std::uint64_t seed = 0;
  std::size_t replicas = 0;
  auto* run = app.add_subcommand("run", "Run the selected configurations and write metrics");
  run->add_option("--config", spec.config_path, "Configuration file")->required();
  run->add_option("--out", spec.output_dir, "Output directory")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the configured seed");
  auto* replicas_opt = run->add_option("--replicas", replicas, "Override the replica count");
  run->add_option("--modes", modes,
                  "Comma-separated subset of static,urtp,urtp+filter,lru,eccr,dc,random-walk");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a configuration and print it with defaults");
  validate->add_option("--config", validate_path, "Configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : p2psim::kExitConfigError;
  }

  if (*validate) return p2psim::validate_config_file(validate_path, std::cout, std::cerr);

  try {
    spec.modes = p2psim::parse_modes(modes);
  } catch (const p2psim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return p2psim::kExitConfigError;
  }
  if (*seed_opt) spec.seed = seed;
  if (*replicas_opt) spec.replicas = replicas;
  return p2psim::run(spec, std::cerr);
}
