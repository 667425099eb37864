#pragma once

#include <array>
#include <string>

namespace tissuesim {

enum class BoundaryKind { sticky, slip };

/// Domain faces, in the order -x, +x, -y, +y, -z, +z.
enum class Face { neg_x = 0, pos_x, neg_y, pos_y, neg_z, pos_z };

BoundaryKind parse_boundary_kind(const std::string& s);
const char* to_string(BoundaryKind kind);

/// Simulation constants. The domain is the cube [domain_min, domain_min + domain_size]^3
/// covered by grid_resolution cells per axis.
struct SimConfig {
  int grid_resolution = 50;
  double domain_min = -1.0;
  double domain_size = 2.0;
  double dt = 1e-4;
  double frame_dt = 0.04;
  int spline_degree = 2;
  std::array<BoundaryKind, 6> boundary{BoundaryKind::slip,   BoundaryKind::slip,
                                       BoundaryKind::slip,   BoundaryKind::slip,
                                       BoundaryKind::sticky, BoundaryKind::slip};
  // Nodes closer than this many cells to a face obey that face's condition.
  int boundary_cells = 2;
  double drive_radius_cells = 3.0;
  double poisson_nu = 0.45;
  double density = 1.0;
  bool deterministic = true;

  double dx() const { return domain_size / grid_resolution; }
  double inv_dx() const { return grid_resolution / domain_size; }
  double drive_radius() const { return drive_radius_cells * dx(); }
  /// Simulation steps per video frame (frame_dt / dt rounded to an integer).
  long frame_stride() const;

  BoundaryKind face(Face f) const { return boundary[static_cast<int>(f)]; }

  /// Throws ErrorKind::validation on a bad configuration.
  void validate() const;
};

}  // namespace tissuesim
