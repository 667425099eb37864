#pragma once

#include <functional>
#include <vector>

#include "tissuesim/core/config.hpp"
#include "tissuesim/core/particle.hpp"
#include "tissuesim/motion/drive.hpp"
#include "tissuesim/mpm/bspline.hpp"
#include "tissuesim/mpm/grid.hpp"

namespace tissuesim::mpm {

struct StepDiagnostics {
  double total_mass = 0.0;  // sum of particle masses
  double grid_mass = 0.0;   // sum of node masses after p2g
  Vec3 total_momentum = Vec3::Zero();
  double max_velocity = 0.0;
  std::size_t active_nodes = 0;
};

/// Owns a scene and advances it with the explicit visco-elastic MPM cycle:
/// p2g -> drive flags -> grid_update -> g2p -> deformation update ->
/// advection -> splat rotation update.
///
/// The reduction order is fixed (particles in index order, nodes in first-touch
/// order), so identical inputs give bit-identical trajectories.
class Simulator {
 public:
  Simulator(Scene scene, SimConfig config);

  const Scene& scene() const { return scene_; }
  const SimConfig& config() const { return config_; }
  long steps_taken() const { return steps_; }
  double time() const { return steps_ * config_.dt; }

  void add_drive(motion::Drive drive) { drives_.push_back(std::move(drive)); }
  void clear_drives() { drives_.clear(); }
  std::vector<motion::Drive>& drives() { return drives_; }

  void set_material(const MaterialField& material);

  /// Replaces the scene and restarts the clock.
  void reset(Scene scene);

  /// Advances by one dt. Errors are rethrown with the step index attached.
  StepDiagnostics step();

  const Grid& grid() const { return grid_; }

 private:
  StepDiagnostics step_impl();

  Scene scene_;
  SimConfig config_;
  Grid grid_;
  std::vector<Mat3> rotations_;  // polar rotation of each F_E, kept in sync by step()
  std::vector<StencilWeights> stencils_;  // p2g weights reused by g2p within a step
  std::vector<motion::Drive> drives_;
  double mass_eps_ = 0.0;
  long steps_ = 0;
};

/// Number of frames run() emits for n_steps: one per stride boundary strictly
/// before n_steps, and always frame 0.
long frame_count(long n_steps, long frame_stride);

using FrameCallback = std::function<void(long frame, const Scene& scene)>;
using DiagnosticsCallback = std::function<void(long step, const StepDiagnostics& diagnostics)>;

/// Runs n_steps. Frame k (the state after k * frame_stride steps) is passed to
/// `on_frame` for k * frame_stride < n_steps; frame 0 is always emitted.
/// `on_diagnostics` fires at every stride boundary reached, including the last
/// step when it falls on one.
void run(Simulator& sim, long n_steps, long frame_stride, const FrameCallback& on_frame,
         const DiagnosticsCallback& on_diagnostics = {});

/// Convenience form returning every frame snapshot.
std::vector<Scene> run(Scene scene, const SimConfig& config, std::vector<motion::Drive> drives, long n_steps,
                       long frame_stride);

}  // namespace tissuesim::mpm
