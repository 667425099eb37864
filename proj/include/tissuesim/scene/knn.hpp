#pragma once

#include <span>
#include <vector>

#include "tissuesim/core/types.hpp"

namespace tissuesim::scene {

/// Static kd-tree over a point set. Queries return the k nearest points
/// ordered by (squared distance, index), so equidistant points are ranked by
/// lower index first.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  /// k nearest points to q, skipping index `exclude` when it is in range.
  std::vector<std::size_t> nearest(const Vec3& q, std::size_t k, std::size_t exclude = npos) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis = -1;           // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end, int depth);

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Neighbor sets N_i of size k excluding i itself. Throws domain if k >= n.
std::vector<std::vector<std::size_t>> knn(std::span<const Vec3> positions, std::size_t k);

}  // namespace tissuesim::scene
