#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tissuesim/core/camera.hpp"
#include "tissuesim/core/image.hpp"
#include "tissuesim/core/particle.hpp"

namespace tissuesim::render {

struct ProjectedSplat {
  Vec2 center;  // pixel coordinates; pixel (i, j) covers [i, i+1) x [j, j+1)
  Mat2 cov;     // screen covariance in px^2, eigenvalues floored at kCovFloor
  double depth = 0.0;
};

inline constexpr double kCovFloor = 0.3;
inline constexpr double kAlphaMax = 0.999;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceStop = 1e-4;
inline constexpr int kTileSize = 16;

/// Perspective projection of the splat center and the affine (Jacobian)
/// projection of its covariance R S S^T R^T. nullopt when the center is not
/// beyond the near plane.
std::optional<ProjectedSplat> project_splat(const Particle& particle, const Camera& camera);

struct RenderResult {
  Image rgb;                 // 3 channels, black background
  Image alpha;               // 1 channel, 1 - final transmittance
  std::vector<int> hit;      // front-most contributing particle per pixel, -1 if none
  std::vector<float> depth;  // camera-space depth of that particle, 0 if none

  int hit_at(int x, int y) const { return hit[static_cast<std::size_t>(y) * rgb.width + x]; }
  float depth_at(int x, int y) const { return depth[static_cast<std::size_t>(y) * rgb.width + x]; }
};

struct RenderOptions {
  bool tiled = true;  // false selects the per-pixel reference loop
  int threads = 1;
};

/// Front-to-back compositing C = sum_i alpha_i c_i prod_{j<i} (1 - alpha_j),
/// alpha_i = min(0.999, o_i exp(-d^T Sigma^-1 d / 2)), contributions with
/// alpha < 1/255 skipped, and a pixel finished once its transmittance drops
/// below 1e-4. Splats are ordered by depth, then by their attribute values,
/// then by index, so the image does not depend on input order. The tiled and
/// per-pixel paths are bit-identical.
RenderResult render(std::span<const Particle> particles, const Camera& camera, const RenderOptions& options = {});

}  // namespace tissuesim::render
