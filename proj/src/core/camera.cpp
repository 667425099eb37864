#include "tissuesim/core/camera.hpp"

#include "tissuesim/core/error.hpp"

namespace tissuesim {

Vec3 Camera::unproject(double u, double v, double z) const {
  const Vec3 cam((u - cx) / fx * z, (v - cy) / fy * z, z);
  return to_world(cam);
}

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorKind::validation, "focal lengths must be positive");
  if (!(near_plane > 0.0)) throw Error(ErrorKind::validation, "near plane must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorKind::validation, "image size must be positive");
  const double orth = (rotation.transpose() * rotation - Mat3::Identity()).norm();
  if (orth > 1e-6 || rotation.determinant() < 0.0) {
    throw Error(ErrorKind::validation, "camera rotation must be a proper rotation");
  }
}

bool Camera::operator==(const Camera& o) const {
  return fx == o.fx && fy == o.fy && cx == o.cx && cy == o.cy && width == o.width &&
         height == o.height && rotation == o.rotation && translation == o.translation &&
         near_plane == o.near_plane;
}

}  // namespace tissuesim
