#pragma once

#include <vector>

#include "tissuesim/core/types.hpp"

namespace tissuesim {

struct TrajectoryFrame {
  int frame_index = 0;
  Vec3 point = Vec3::Zero();
};

/// Time-stamped 3D path of one manipulation point. Frame indices are video
/// frames; frame f is reached at simulation time f * frame_dt.
struct Trajectory {
  std::vector<TrajectoryFrame> frames;
  double region_radius = 0.0;

  const Vec3& start_point() const { return frames.front().point; }
  int first_frame() const { return frames.front().frame_index; }
  int last_frame() const { return frames.back().frame_index; }

  /// Strictly increasing indices and at least two frames.
  void validate() const;
};

}  // namespace tissuesim
