#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace p2psim {

/// Seeded random source. The engine is std::mt19937_64 (fully specified by
/// the standard); the distributions below are hand-rolled so draws are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Independent child stream; the same (seed, stream) always yields the
  /// same child.
  Rng child(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace p2psim
