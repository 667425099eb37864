#include "tissuesim/motion/drive.hpp"

#include <algorithm>
#include <cmath>

#include "tissuesim/core/error.hpp"
#include "tissuesim/mpm/bspline.hpp"

namespace tissuesim::motion {

std::vector<std::size_t> select_region(std::span<const Particle> particles, const Vec3& p0, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::validation, "drive region radius must be positive");
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    if ((particles[i].position - p0).squaredNorm() <= r2) out.push_back(i);
  }
  if (out.empty()) throw Error(ErrorKind::empty_region, "trajectory start misses the tissue: empty drive region");
  return out;
}

std::optional<Vec3> drive_velocity(const Trajectory& trajectory, double t, double frame_dt) {
  if (trajectory.frames.size() < 2 || t < 0.0) return std::nullopt;
  // Tolerance keeps t = n * frame_dt from landing in frame n - 1.
  const long n = static_cast<long>(std::floor(t / frame_dt + 1e-9));
  const auto& fr = trajectory.frames;
  if (n < fr.front().frame_index || n >= fr.back().frame_index) return std::nullopt;
  for (std::size_t k = 0; k + 1 < fr.size(); ++k) {
    if (n < fr[k + 1].frame_index) {
      const double span = static_cast<double>(fr[k + 1].frame_index - fr[k].frame_index);
      return Vec3((fr[k + 1].point - fr[k].point) / (span * frame_dt));
    }
  }
  return std::nullopt;
}

void drive_nodes(mpm::Grid& grid, std::span<const Particle> particles, std::span<const std::size_t> tagged,
                 const std::optional<Vec3>& velocity, const SimConfig& config) {
  if (!velocity) return;
  const int degree = config.spline_degree;
  const int width = degree + 1;
  const double inv_dx = grid.inv_dx();
  std::vector<std::size_t> region;
  region.reserve(tagged.size() * width * width * width);
  for (std::size_t i : tagged) {
    const Vec3& x = particles[i].position;
    int base[3];
    for (int d = 0; d < 3; ++d) {
      base[d] = mpm::stencil_base((x[d] - grid.domain_min()) * inv_dx, degree);
      if (base[d] < 0 || base[d] + degree > grid.resolution()) {
        throw Error(ErrorKind::stencil_clipped, "driven particle stencil leaves the grid", i);
      }
    }
    for (int a = 0; a < width; ++a) {
      for (int b = 0; b < width; ++b) {
        for (int c = 0; c < width; ++c) {
          region.push_back(grid.index(base[0] + a, base[1] + b, base[2] + c));
        }
      }
    }
  }
  // One vote per drive per node, however many tagged particles share it.
  std::sort(region.begin(), region.end());
  region.erase(std::unique(region.begin(), region.end()), region.end());
  for (std::size_t idx : region) {
    grid.touch(idx);
    auto& node = grid.node(idx);
    node.flags |= mpm::kDriveRegion;
    node.drive_sum += *velocity;
    node.drive_count += 1;
  }
}

Drive Drive::from_trajectory(std::span<const Particle> particles, const Trajectory& trajectory,
                             double frame_dt) {
  trajectory.validate();
  Drive d;
  d.tagged = select_region(particles, trajectory.start_point(), trajectory.region_radius);
  d.velocity = [trajectory, frame_dt](double t) { return drive_velocity(trajectory, t, frame_dt); };
  return d;
}

}  // namespace tissuesim::motion
