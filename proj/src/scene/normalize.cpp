#include "tissuesim/scene/normalize.hpp"

#include "tissuesim/core/error.hpp"

namespace tissuesim::scene {

bool SceneBounds::contains(const Vec3& p) const {
  return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
}

SceneBounds bounds_of(std::span<const Particle> particles) {
  if (particles.empty()) throw Error(ErrorKind::domain, "bounds of an empty scene");
  SceneBounds b{particles[0].position, particles[0].position};
  for (const auto& p : particles) {
    b.min = b.min.cwiseMin(p.position);
    b.max = b.max.cwiseMax(p.position);
  }
  return b;
}

NormalizeTransform normalize(Scene& scene, double margin) {
  const SceneBounds b = bounds_of(scene.particles);
  const double extent = b.extent().maxCoeff();
  if (!(extent > 0.0)) throw Error(ErrorKind::domain, "cannot normalize a zero-extent cloud");
  NormalizeTransform t;
  t.scale = 2.0 * (1.0 - margin) / extent;
  t.offset = -t.scale * b.center();
  for (auto& p : scene.particles) {
    p.position = t.apply(p.position);
    p.scale *= t.scale;
  }
  return t;
}

void denormalize(Scene& scene, const NormalizeTransform& t) {
  for (auto& p : scene.particles) {
    p.position = t.invert(p.position);
    p.scale /= t.scale;
  }
}

}  // namespace tissuesim::scene
