#pragma once

#include <span>

#include "tissuesim/core/particle.hpp"

namespace tissuesim::scene {

struct SceneBounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  /// Inclusive containment.
  bool contains(const Vec3& p) const;
};

SceneBounds bounds_of(std::span<const Particle> particles);

/// x_normalized = scale * x + offset.
struct NormalizeTransform {
  double scale = 1.0;
  Vec3 offset = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return scale * x + offset; }
  Vec3 invert(const Vec3& x) const { return (x - offset) / scale; }
};

/// Fits the cloud into [-1, 1]^3 with a 5% margin on the longest axis using a
/// uniform scale and a translation that centers the bounding box. Splat
/// scales are multiplied by the same factor. Throws domain on zero extent.
NormalizeTransform normalize(Scene& scene, double margin = 0.05);

/// Inverse of normalize on positions and splat scales.
void denormalize(Scene& scene, const NormalizeTransform& transform);

}  // namespace tissuesim::scene
