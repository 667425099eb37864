#include "tissuesim/core/particle.hpp"

namespace tissuesim {

bool Particle::operator==(const Particle& o) const {
  return position == o.position && velocity == o.velocity && mass == o.mass &&
         volume0 == o.volume0 && F_E == o.F_E && F_v == o.F_v && C == o.C &&
         opacity == o.opacity && rotation.coeffs() == o.rotation.coeffs() &&
         scale == o.scale && color == o.color;
}

void assign_uniform_mass(Scene& scene, double density, double volume_per_particle) {
  for (auto& p : scene.particles) {
    p.volume0 = volume_per_particle;
    p.mass = density * volume_per_particle;
  }
}

}  // namespace tissuesim
