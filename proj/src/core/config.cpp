#include "tissuesim/core/config.hpp"

#include <cmath>

#include "tissuesim/core/error.hpp"

namespace tissuesim {

BoundaryKind parse_boundary_kind(const std::string& s) {
  if (s == "sticky") return BoundaryKind::sticky;
  if (s == "slip") return BoundaryKind::slip;
  throw Error(ErrorKind::validation, "unknown boundary condition '" + s + "'");
}

const char* to_string(BoundaryKind kind) {
  return kind == BoundaryKind::sticky ? "sticky" : "slip";
}

long SimConfig::frame_stride() const { return std::lround(frame_dt / dt); }

void SimConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::validation, m); };
  if (grid_resolution < 8) fail("grid_resolution must be at least 8");
  if (!(domain_size > 0.0)) fail("domain_size must be positive");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(frame_dt > 0.0)) fail("frame_dt must be positive");
  if (dt > frame_dt) fail("dt must not exceed frame_dt");
  if (std::abs(frame_stride() * dt - frame_dt) > 1e-9 * frame_dt) {
    fail("frame_dt must be an integer multiple of dt");
  }
  if (spline_degree != 2 && spline_degree != 3) fail("spline_degree must be 2 or 3");
  if (boundary_cells < 0 || 2 * boundary_cells >= grid_resolution) fail("boundary_cells out of range");
  if (!(drive_radius_cells > 0.0)) fail("drive radius must be positive");
  if (!(poisson_nu >= 0.0 && poisson_nu < 0.5)) fail("poisson_nu must lie in [0, 0.5)");
  if (!(density > 0.0)) fail("density must be positive");
}

}  // namespace tissuesim
