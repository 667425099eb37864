#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tissuesim/core/config.hpp"
#include "tissuesim/core/particle.hpp"
#include "tissuesim/core/trajectory.hpp"
#include "tissuesim/mpm/grid.hpp"

namespace tissuesim::motion {

/// Indices of particles within `radius` of `p0`. Throws
/// ErrorKind::empty_region when the ball contains no particle.
std::vector<std::size_t> select_region(std::span<const Particle> particles, const Vec3& p0, double radius);

/// Piecewise-constant drive velocity (p^{n+1} - p^n) / frame_dt for the frame
/// interval containing t. Keyframes that skip frames are spread evenly over
/// the gap. Returns nullopt before the first and from the last keyframe on.
std::optional<Vec3> drive_velocity(const Trajectory& trajectory, double t, double frame_dt);

/// Flags every node in the B-spline support of a tagged particle and adds
/// `velocity` to its drive accumulator; overlapping drives average in
/// grid_update. A nullopt velocity leaves the grid untouched.
void drive_nodes(mpm::Grid& grid, std::span<const Particle> particles, std::span<const std::size_t> tagged,
                 const std::optional<Vec3>& velocity, const SimConfig& config);

/// A tagged particle set following a velocity schedule. The tags are
/// Lagrangian: the region moves with the particles.
struct Drive {
  std::vector<std::size_t> tagged;
  std::function<std::optional<Vec3>(double t)> velocity;

  static Drive from_trajectory(std::span<const Particle> particles, const Trajectory& trajectory,
                               double frame_dt);
};

}  // namespace tissuesim::motion
