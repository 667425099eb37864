#pragma once

#include "tissuesim/core/types.hpp"

namespace tissuesim {

/// Pinhole camera. `rotation`/`translation` map world to camera coordinates;
/// the camera looks down +z with +x right and +y down in the image.
struct Camera {
  double fx = 100.0;
  double fy = 100.0;
  double cx = 50.0;
  double cy = 50.0;
  int width = 100;
  int height = 100;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double near_plane = 0.01;

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 to_world(const Vec3& cam) const { return rotation.transpose() * (cam - translation); }
  Vec3 center() const { return -rotation.transpose() * translation; }

  /// World point seen at pixel coordinates (u, v) at camera-space depth z.
  Vec3 unproject(double u, double v, double z) const;

  void validate() const;
  bool operator==(const Camera& o) const;
};

}  // namespace tissuesim
