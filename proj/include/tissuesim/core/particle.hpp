#pragma once

#include <vector>

#include "tissuesim/core/material.hpp"
#include "tissuesim/core/types.hpp"

namespace tissuesim {

/// A splat kernel that doubles as an MPM material point. Material parameters
/// are not stored inline; particle i reads row i of the scene's MaterialField.
struct Particle {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double mass = 1.0;
  double volume0 = 1.0;
  Mat3 F_E = Mat3::Identity();
  Mat3 F_v = Mat3::Identity();
  Mat3 C = Mat3::Zero();  // APIC affine velocity

  double opacity = 1.0;
  Quat rotation = Quat::Identity();
  Vec3 scale = Vec3::Constant(0.01);
  Vec3 color = Vec3::Constant(0.5);

  bool operator==(const Particle& o) const;
};

struct Scene {
  std::vector<Particle> particles;
  MaterialField material;

  std::size_t size() const { return particles.size(); }
  bool operator==(const Scene& o) const = default;
};

/// Sets mass = density * volume0 on every particle.
void assign_uniform_mass(Scene& scene, double density, double volume_per_particle);

}  // namespace tissuesim
