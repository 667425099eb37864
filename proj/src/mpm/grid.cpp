#include "tissuesim/mpm/grid.hpp"

namespace tissuesim::mpm {

Grid::Grid(const SimConfig& config)
    : n_(config.grid_resolution),
      dx_(config.dx()),
      inv_dx_(config.inv_dx()),
      origin_(config.domain_min),
      boundary_cells_(config.boundary_cells) {
  const std::size_t count = static_cast<std::size_t>(n_ + 1) * (n_ + 1) * (n_ + 1);
  nodes_.resize(count);
  active_mark_.assign(count, 0);
  active_.reserve(4096);
}

Vec3 Grid::node_position(std::size_t idx) const {
  const auto c = node_coords(idx);
  return node_position(c[0], c[1], c[2]);
}

std::array<int, 3> Grid::node_coords(std::size_t idx) const {
  const std::size_t m = static_cast<std::size_t>(n_ + 1);
  return {static_cast<int>(idx / (m * m)), static_cast<int>((idx / m) % m), static_cast<int>(idx % m)};
}

void Grid::clear() {
  for (std::size_t idx : active_) {
    nodes_[idx] = GridNode{};
    active_mark_[idx] = 0;
  }
  active_.clear();
}

void Grid::clear_drive() {
  for (std::size_t idx : active_) {
    auto& n = nodes_[idx];
    n.drive_sum.setZero();
    n.drive_count = 0;
    n.flags &= static_cast<std::uint8_t>(~kDriveRegion);
  }
}

double Grid::total_mass() const {
  double m = 0.0;
  for (std::size_t idx : active_) m += nodes_[idx].mass;
  return m;
}

Vec3 Grid::total_momentum() const {
  Vec3 p = Vec3::Zero();
  for (std::size_t idx : active_) p += nodes_[idx].mass * nodes_[idx].velocity;
  return p;
}

std::uint8_t Grid::boundary_faces(int i, int j, int k) const {
  std::uint8_t mask = 0;
  const int c[3] = {i, j, k};
  for (int d = 0; d < 3; ++d) {
    if (c[d] < boundary_cells_) mask |= static_cast<std::uint8_t>(1u << (2 * d));
    if (c[d] > n_ - boundary_cells_) mask |= static_cast<std::uint8_t>(1u << (2 * d + 1));
  }
  return mask;
}

}  // namespace tissuesim::mpm
