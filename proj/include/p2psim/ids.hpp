#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace p2psim {

struct FileId {
  std::uint32_t value = 0;
  friend auto operator<=>(const FileId&, const FileId&) = default;
};

struct PeerId {
  std::uint32_t value = 0;
  friend auto operator<=>(const PeerId&, const PeerId&) = default;
};

/// Simulation clock. One forwarding hop costs one tick.
using Tick = std::int64_t;

}  // namespace p2psim

template <>
struct std::hash<p2psim::FileId> {
  std::size_t operator()(const p2psim::FileId& f) const noexcept { return f.value; }
};

template <>
struct std::hash<p2psim::PeerId> {
  std::size_t operator()(const p2psim::PeerId& p) const noexcept { return p.value; }
};
