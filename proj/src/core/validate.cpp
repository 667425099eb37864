#include "tissuesim/core/validate.hpp"

#include <cmath>

#include "tissuesim/mpm/bspline.hpp"

namespace tissuesim {

std::vector<Violation> validate_scene(const Scene& scene, const SimConfig& config) {
  std::vector<Violation> out;
  if (scene.particles.empty()) {
    out.push_back({std::nullopt, "empty scene"});
    return out;
  }
  const auto& mat = scene.material;
  if (mat.size() != scene.size() || mat.lambda.size() != scene.size() || mat.eta.size() != scene.size() ||
      mat.gamma.size() != scene.size() || mat.cluster_id.size() != scene.size()) {
    out.push_back({std::nullopt, "material field size does not match particle count"});
  }
  const bool material_ok = out.empty();
  const double lo = config.domain_min;
  const double hi = config.domain_min + config.domain_size;

  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Particle& p = scene.particles[i];
    auto add = [&](std::string m) { out.push_back({i, std::move(m)}); };
    if (!p.position.allFinite() || !p.velocity.allFinite() || !p.F_E.allFinite() || !p.F_v.allFinite()) {
      add("non-finite state");
      continue;
    }
    if ((p.position.array() < lo).any() || (p.position.array() > hi).any()) {
      add("position outside domain");
    } else if (!mpm::stencil_fits(p.position, lo, config.inv_dx(), config.grid_resolution,
                                  config.spline_degree)) {
      add("position too close to the domain edge for a full stencil");
    }
    if (!(p.mass > 0.0)) add("non-positive mass");
    if (!(p.volume0 > 0.0)) add("non-positive rest volume");
    if (!(p.F_E.determinant() > 0.0)) add("degenerate elastic deformation gradient");
    if (!(p.F_v.determinant() > 0.0)) add("degenerate viscous deformation gradient");
    if (!(p.opacity >= 0.0 && p.opacity <= 1.0)) add("opacity outside [0, 1]");
    if (!((p.scale.array() > 0.0).all())) add("non-positive scale");
    if (std::abs(p.rotation.norm() - 1.0) > 1e-6) add("rotation is not a unit quaternion");
    if (material_ok) {
      if (!(mat.mu[i] > 0.0)) add("shear modulus must be positive");
      if (!(mat.lambda[i] > 0.0)) add("Lame modulus must be positive");
      if (!(mat.eta[i] >= 0.0)) add("viscosity must be non-negative");
      if (!(mat.gamma[i] >= 0.0)) add("viscous rate factor must be non-negative");
      if (mat.cluster_id[i] < 0 || mat.cluster_id[i] >= mat.cluster_count) add("cluster id out of range");
    }
  }
  return out;
}

}  // namespace tissuesim
