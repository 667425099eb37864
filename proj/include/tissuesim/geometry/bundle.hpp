#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tissuesim/core/types.hpp"

namespace tissuesim::geometry {

/// N tracked points over T frames, plus neighbor sets over frame-0 positions.
struct TrajectoryBundle {
  std::size_t frames = 0;
  std::size_t points = 0;
  std::vector<Vec3> xyz;  // frame-major: xyz[t * points + i]
  std::vector<std::vector<std::size_t>> neighbors;

  Vec3& at(std::size_t t, std::size_t i) { return xyz[t * points + i]; }
  const Vec3& at(std::size_t t, std::size_t i) const { return xyz[t * points + i]; }
  /// mu_i^t - mu_i^{t-1}, t >= 1.
  Vec3 displacement(std::size_t t, std::size_t i) const { return at(t, i) - at(t - 1, i); }

  static TrajectoryBundle zeros(std::size_t frames, std::size_t points);
  /// Recomputes neighbor sets from frame 0 with k clamped to points - 1.
  void compute_neighbors(std::size_t k);
  bool operator==(const TrajectoryBundle&) const = default;
};

// Text table, one row per (frame, point): header "frame,point_id,x,y,z".
// Every (frame, point) pair must appear exactly once; row order is free.
TrajectoryBundle read_bundle(std::istream& in);
TrajectoryBundle load_bundle(const std::filesystem::path& path);
void write_bundle(const TrajectoryBundle& bundle, std::ostream& out);
void save_bundle(const TrajectoryBundle& bundle, const std::filesystem::path& path);

}  // namespace tissuesim::geometry
