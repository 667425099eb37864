#include "tissuesim/scene/knn.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "tissuesim/core/error.hpp"

namespace tissuesim::scene {

namespace {

constexpr std::size_t kLeafSize = 8;

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, points_.size(), 0);
  }
}

std::size_t KdTree::build(std::size_t begin, std::size_t end, int depth) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  // Split on the axis of largest spread.
  Vec3 lo = points_[order_[begin]], hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const std::size_t left = build(begin, mid, depth + 1);
  const std::size_t right = build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<std::size_t> KdTree::nearest(const Vec3& q, std::size_t k, std::size_t exclude) const {
  std::vector<std::size_t> out;
  if (k == 0 || points_.empty()) return out;

  std::priority_queue<Candidate> best;  // max-heap on (d2, index)
  auto offer = [&](std::size_t idx) {
    if (idx == exclude) return;
    const Candidate c{(points_[idx] - q).squaredNorm(), idx};
    if (best.size() < k) {
      best.push(c);
    } else if (c < best.top()) {
      best.pop();
      best.push(c);
    }
  };

  // Depth-first descent, nearer child first. A subtree is skipped only when
  // its slab distance strictly exceeds the current k-th distance, so points
  // tied at that distance still compete on index.
  auto visit = [&](auto&& self, std::size_t id) -> void {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) offer(order_[i]);
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::size_t near = diff < 0.0 ? node.left : node.right;
    const std::size_t far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (best.size() < k || diff * diff <= best.top().first) self(self, far);
  };
  visit(visit, 0);

  out.resize(best.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = best.top().second;
    best.pop();
  }
  return out;
}

std::vector<std::vector<std::size_t>> knn(std::span<const Vec3> positions, std::size_t k) {
  if (k >= positions.size()) {
    throw Error(ErrorKind::domain, "knn: k = " + std::to_string(k) + " must be below the point count " +
                                       std::to_string(positions.size()));
  }
  const KdTree tree(positions);
  std::vector<std::vector<std::size_t>> sets(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) sets[i] = tree.nearest(positions[i], k, i);
  return sets;
}

}  // namespace tissuesim::scene
