#pragma once

#include <cstdint>
#include <optional>

#include "tissuesim/core/particle.hpp"

namespace tissuesim::scene {

struct ThickenOptions {
  int layers = 1000;
  double z_expand = 0.25;
  std::uint64_t seed = 0;
  /// Upper bound on the output particle count; kept copies are subsampled
  /// uniformly to fit. Must not be below the input count.
  std::optional<std::size_t> cap;
  /// Copies are scaled toward this point (the camera center). Positions
  /// relative to it must have positive z.
  Vec3 ray_origin = Vec3::Zero();
};

struct ThickenResult {
  Scene scene;             // originals first, then kept copies in generation order
  std::size_t candidates = 0;
  std::size_t kept = 0;    // copies inside the expanded box, before capping
  std::size_t emitted = 0; // copies actually appended
  bool capped = false;
};

/// Surface thickening: for l = 1..L and every source kernel, a copy at
/// o + (mu - o) * (u + l) / L with u uniform in [0,1)^3, kept when it lies in
/// the source bounding box with z_max grown by (1 + z_expand). Copies inherit
/// every attribute of their source, including material.
///
/// Random draws come from mt19937_64(seed), three per candidate in (l, i, axis)
/// order, each mapped to [0,1) as (r >> 11) * 2^-53.
ThickenResult thicken(const Scene& scene, const ThickenOptions& options = {});

/// Uniform [0,1) double from one 64-bit draw, as used by thicken.
inline double unit_from_bits(std::uint64_t r) { return static_cast<double>(r >> 11) * 0x1.0p-53; }

}  // namespace tissuesim::scene
