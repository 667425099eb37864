#pragma once

#include <cstdint>
#include <vector>

#include "tissuesim/core/config.hpp"
#include "tissuesim/core/types.hpp"

namespace tissuesim::mpm {

enum NodeFlag : std::uint8_t {
  kDomainBoundary = 1u << 0,
  kDriveRegion = 1u << 1,
};

struct GridNode {
  double mass = 0.0;
  Vec3 momentum = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 force = Vec3::Zero();  // internal force, -sum_p V0 J sigma grad w
  Vec3 drive_sum = Vec3::Zero();
  int drive_count = 0;
  std::uint8_t flags = 0;
};

/// Dense node storage with an active list. Only nodes touched since the last
/// clear() are visited by the update and reset passes, so clearing is
/// proportional to the particle footprint rather than the grid volume.
class Grid {
 public:
  explicit Grid(const SimConfig& config);

  int resolution() const { return n_; }
  int nodes_per_axis() const { return n_ + 1; }
  double dx() const { return dx_; }
  double inv_dx() const { return inv_dx_; }
  double domain_min() const { return origin_; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * (n_ + 1) + j) * (n_ + 1) + k;
  }
  Vec3 node_position(int i, int j, int k) const {
    return {origin_ + i * dx_, origin_ + j * dx_, origin_ + k * dx_};
  }
  Vec3 node_position(std::size_t idx) const;
  std::array<int, 3> node_coords(std::size_t idx) const;

  GridNode& node(std::size_t idx) { return nodes_[idx]; }
  const GridNode& node(std::size_t idx) const { return nodes_[idx]; }
  GridNode& node(int i, int j, int k) { return nodes_[index(i, j, k)]; }
  const GridNode& node(int i, int j, int k) const { return nodes_[index(i, j, k)]; }

  /// Marks a node active the first time it is touched after clear().
  void touch(std::size_t idx) {
    if (!active_mark_[idx]) {
      active_mark_[idx] = 1;
      active_.push_back(idx);
    }
  }
  const std::vector<std::size_t>& active_nodes() const { return active_; }

  /// Zeroes every active node and empties the active list.
  void clear();

  /// Removes the drive flag and accumulated drive velocities from all nodes.
  void clear_drive();

  double total_mass() const;
  Vec3 total_momentum() const;

  /// Nodes within boundary_cells of a face, as a bitmask over Face values.
  std::uint8_t boundary_faces(int i, int j, int k) const;

 private:
  int n_;
  double dx_;
  double inv_dx_;
  double origin_;
  int boundary_cells_;
  std::vector<GridNode> nodes_;
  std::vector<std::uint8_t> active_mark_;
  std::vector<std::size_t> active_;
};

}  // namespace tissuesim::mpm
