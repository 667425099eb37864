#include "tissuesim/estimate/cluster.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <string>

#include "tissuesim/core/error.hpp"

namespace tissuesim::estimate {

namespace {

using Members = std::vector<std::size_t>;

Vec3 centroid(std::span<const Particle> ps, const Members& m) {
  Vec3 c = Vec3::Zero();
  for (std::size_t i : m) c += ps[i].position;
  return c / static_cast<double>(m.size());
}

}  // namespace

std::vector<int> cluster_particles(std::span<const Particle> ps, int cluster_count) {
  const std::size_t n = ps.size();
  if (cluster_count < 1 || static_cast<std::size_t>(cluster_count) > n) {
    throw Error(ErrorKind::validation, "cluster_count " + std::to_string(cluster_count) + " must be in [1, " +
                                           std::to_string(n) + "]");
  }
  Vec3 lo = ps[0].position, hi = lo;
  for (const auto& p : ps) {
    lo = lo.cwiseMin(p.position);
    hi = hi.cwiseMax(p.position);
  }
  const Vec3 extent = hi - lo;

  // Grow the bin count along the axis with the widest bins until there are
  // at least cluster_count bins.
  std::array<int, 3> dims{1, 1, 1};
  while (dims[0] * dims[1] * dims[2] < cluster_count) {
    int axis = 0;
    double widest = -1.0;
    for (int d = 0; d < 3; ++d) {
      const double w = extent[d] / dims[d];
      if (w > widest) {
        widest = w;
        axis = d;
      }
    }
    if (widest <= 0.0) break;  // all points coincide; splitting handles the rest
    ++dims[axis];
  }

  std::map<long, Members> bins;
  for (std::size_t i = 0; i < n; ++i) {
    long key = 0;
    for (int d = 0; d < 3; ++d) {
      int b = extent[d] > 0.0 ? static_cast<int>((ps[i].position[d] - lo[d]) / extent[d] * dims[d]) : 0;
      b = std::clamp(b, 0, dims[d] - 1);
      key = key * dims[d] + b;
    }
    bins[key].push_back(i);
  }
  std::vector<Members> clusters;
  for (auto& [key, m] : bins) clusters.push_back(std::move(m));

  while (clusters.size() > static_cast<std::size_t>(cluster_count)) {
    std::size_t small = 0;
    for (std::size_t c = 1; c < clusters.size(); ++c) {
      if (clusters[c].size() < clusters[small].size()) small = c;
    }
    const Vec3 cs = centroid(ps, clusters[small]);
    std::size_t target = small == 0 ? 1 : 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (c == small) continue;
      const double d = (centroid(ps, clusters[c]) - cs).squaredNorm();
      if (d < best) {
        best = d;
        target = c;
      }
    }
    clusters[target].insert(clusters[target].end(), clusters[small].begin(), clusters[small].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(small));
  }

  while (clusters.size() < static_cast<std::size_t>(cluster_count)) {
    std::size_t big = 0;
    for (std::size_t c = 1; c < clusters.size(); ++c) {
      if (clusters[c].size() > clusters[big].size()) big = c;
    }
    Members& m = clusters[big];
    Vec3 mlo = ps[m[0]].position, mhi = mlo;
    for (std::size_t i : m) {
      mlo = mlo.cwiseMin(ps[i].position);
      mhi = mhi.cwiseMax(ps[i].position);
    }
    int axis = 0;
    (mhi - mlo).maxCoeff(&axis);
    std::sort(m.begin(), m.end(), [&](std::size_t a, std::size_t b) {
      if (ps[a].position[axis] != ps[b].position[axis]) return ps[a].position[axis] < ps[b].position[axis];
      return a < b;
    });
    Members upper(m.begin() + static_cast<std::ptrdiff_t>(m.size() / 2), m.end());
    m.resize(m.size() / 2);
    clusters.push_back(std::move(upper));
  }

  for (auto& m : clusters) std::sort(m.begin(), m.end());
  std::sort(clusters.begin(), clusters.end(), [](const Members& a, const Members& b) { return a[0] < b[0]; });
  std::vector<int> labels(n, 0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t i : clusters[c]) labels[i] = static_cast<int>(c);
  }
  return labels;
}

void assign_clusters(Scene& scene, int cluster_count) {
  if (scene.material.size() != scene.size()) {
    throw Error(ErrorKind::validation, "material field size does not match particle count");
  }
  scene.material.cluster_id = cluster_particles(scene.particles, cluster_count);
  scene.material.cluster_count = cluster_count;
}

}  // namespace tissuesim::estimate
