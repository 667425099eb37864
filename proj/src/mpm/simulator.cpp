#include "tissuesim/mpm/simulator.hpp"

#include <cmath>
#include <string>

#include "tissuesim/core/error.hpp"
#include "tissuesim/mpm/constitutive.hpp"
#include "tissuesim/mpm/transfer.hpp"

namespace tissuesim::mpm {

Simulator::Simulator(Scene scene, SimConfig config) : scene_(std::move(scene)), config_(config), grid_(config) {
  config_.validate();
  reset(std::move(scene_));
}

void Simulator::reset(Scene scene) {
  if (scene.material.size() != scene.particles.size()) {
    throw Error(ErrorKind::validation, "material field size does not match particle count");
  }
  scene_ = std::move(scene);
  rotations_.resize(scene_.size());
  for (std::size_t i = 0; i < scene_.size(); ++i) rotations_[i] = polar_rotation(scene_.particles[i].F_E);
  mass_eps_ = mass_epsilon(scene_.particles);
  steps_ = 0;
  grid_.clear();
}

void Simulator::set_material(const MaterialField& material) {
  if (material.size() != scene_.size()) {
    throw Error(ErrorKind::validation, "material field size does not match particle count");
  }
  scene_.material = material;
}

StepDiagnostics Simulator::step() {
  try {
    return step_impl();
  } catch (const Error& e) {
    throw e.with_step(steps_);
  }
}

StepDiagnostics Simulator::step_impl() {
  const double dt = config_.dt;
  auto& particles = scene_.particles;

  grid_.clear();
  p2g(particles, scene_.material, grid_, config_, rotations_, &stencils_);

  StepDiagnostics diag;
  diag.grid_mass = grid_.total_mass();

  const double t = time();
  for (const auto& drive : drives_) {
    if (!drive.velocity) continue;
    motion::drive_nodes(grid_, particles, drive.tagged, drive.velocity(t), config_);
  }

  grid_update(grid_, dt, config_, mass_eps_);
  g2p(grid_, particles, config_, stencils_);

  const double dx = config_.dx();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    Particle& p = particles[i];
    const double speed = p.velocity.norm();
    if (!(dt * speed < dx)) {
      throw Error(ErrorKind::cfl_violation,
                  "CFL violated by particle " + std::to_string(i) + ": dt*|v| = " + std::to_string(dt * speed) +
                      " >= dx",
                  i);
    }
    update_deformation(p, scene_.material.gamma[i], p.C, dt, i);
    p.position += dt * p.velocity;

    const Mat3 R = polar_rotation(p.F_E);
    const Mat3 delta = R * rotations_[i].transpose();
    p.rotation = (Quat(delta) * p.rotation).normalized();
    rotations_[i] = R;

    diag.total_mass += p.mass;
    diag.total_momentum += p.mass * p.velocity;
    diag.max_velocity = std::max(diag.max_velocity, speed);
  }
  diag.active_nodes = grid_.active_nodes().size();
  ++steps_;
  return diag;
}

long frame_count(long n_steps, long frame_stride) {
  if (n_steps <= 0) return 1;
  return (n_steps + frame_stride - 1) / frame_stride;
}

void run(Simulator& sim, long n_steps, long frame_stride, const FrameCallback& on_frame,
         const DiagnosticsCallback& on_diagnostics) {
  if (frame_stride <= 0) throw Error(ErrorKind::validation, "frame_stride must be positive");
  if (n_steps < 0) throw Error(ErrorKind::validation, "n_steps must be non-negative");
  if (on_frame) on_frame(0, sim.scene());
  for (long s = 1; s <= n_steps; ++s) {
    const StepDiagnostics d = sim.step();
    if (s % frame_stride != 0) continue;
    if (on_diagnostics) on_diagnostics(s, d);
    if (on_frame && s < n_steps) on_frame(s / frame_stride, sim.scene());
  }
}

std::vector<Scene> run(Scene scene, const SimConfig& config, std::vector<motion::Drive> drives, long n_steps,
                       long frame_stride) {
  Simulator sim(std::move(scene), config);
  for (auto& d : drives) sim.add_drive(std::move(d));
  std::vector<Scene> frames;
  frames.reserve(static_cast<std::size_t>(frame_count(n_steps, frame_stride)));
  run(sim, n_steps, frame_stride, [&](long, const Scene& s) { frames.push_back(s); });
  return frames;
}

}  // namespace tissuesim::mpm
