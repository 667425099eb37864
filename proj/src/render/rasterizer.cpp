#include "tissuesim/render/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace tissuesim::render {

namespace {

struct Prepared {
  std::size_t index;
  Vec2 center;
  double conic_a, conic_b, conic_c;  // inverse covariance entries
  double opacity;
  Vec3 color;
  double depth;
  int x0, x1, y0, y1;  // inclusive pixel bounds of the alpha >= 1/255 footprint
};

// Total order used for compositing. Attributes break depth ties so that two
// splats at equal depth composite the same way whatever their input indices.
bool before(const Particle& pa, double da, std::size_t ia, const Particle& pb, double db, std::size_t ib) {
  if (da != db) return da < db;
  auto key = [](const Particle& p) {
    return std::make_tuple(p.position.x(), p.position.y(), p.position.z(), p.opacity, p.color.x(), p.color.y(),
                           p.color.z(), p.scale.x(), p.scale.y(), p.scale.z(), p.rotation.w(), p.rotation.x(),
                           p.rotation.y(), p.rotation.z());
  };
  const auto ka = key(pa), kb = key(pb);
  if (ka != kb) return ka < kb;
  return ia < ib;
}

std::vector<Prepared> prepare(std::span<const Particle> particles, const Camera& camera) {
  std::vector<Prepared> out;
  out.reserve(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Particle& p = particles[i];
    if (!(p.opacity >= kAlphaMin)) continue;  // can never reach the skip threshold
    const auto proj = project_splat(p, camera);
    if (!proj) continue;
    const Mat2& S = proj->cov;
    const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(0, 1);
    Prepared s;
    s.index = i;
    s.center = proj->center;
    s.conic_a = S(1, 1) / det;
    s.conic_b = -S(0, 1) / det;
    s.conic_c = S(0, 0) / det;
    s.opacity = std::min(p.opacity, 1.0);
    s.color = p.color;
    s.depth = proj->depth;
    // alpha >= 1/255 requires q <= 2 ln(255 o); the footprint's half-extent
    // along x is sqrt(q_max Sigma_xx). One pixel of slack absorbs rounding.
    const double q_max = 2.0 * std::log(255.0 * std::min(p.opacity, 1.0));
    const double rx = std::sqrt(q_max * S(0, 0)) + 1.0;
    const double ry = std::sqrt(q_max * S(1, 1)) + 1.0;
    const double fx0 = std::floor(s.center.x() - rx - 0.5), fx1 = std::ceil(s.center.x() + rx - 0.5);
    const double fy0 = std::floor(s.center.y() - ry - 0.5), fy1 = std::ceil(s.center.y() + ry - 0.5);
    if (fx1 < 0.0 || fy1 < 0.0 || fx0 >= camera.width || fy0 >= camera.height) continue;
    s.x0 = static_cast<int>(std::max(fx0, 0.0));
    s.y0 = static_cast<int>(std::max(fy0, 0.0));
    s.x1 = static_cast<int>(std::min(fx1, camera.width - 1.0));
    s.y1 = static_cast<int>(std::min(fy1, camera.height - 1.0));
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [&](const Prepared& a, const Prepared& b) {
    return before(particles[a.index], a.depth, a.index, particles[b.index], b.depth, b.index);
  });
  return out;
}

// Composites the candidate list into one pixel. Identical arithmetic for both
// render paths.
template <typename Candidates>
void shade(int x, int y, const std::vector<Prepared>& splats, const Candidates& candidates, RenderResult& out) {
  const double px = x + 0.5, py = y + 0.5;
  double T = 1.0;
  Vec3 c = Vec3::Zero();
  int hit = -1;
  double hit_depth = 0.0;
  for (const auto k : candidates) {
    const Prepared& s = splats[k];
    const double dx = px - s.center.x(), dy = py - s.center.y();
    const double q = s.conic_a * dx * dx + 2.0 * s.conic_b * dx * dy + s.conic_c * dy * dy;
    const double alpha = std::min(kAlphaMax, s.opacity * std::exp(-0.5 * q));
    if (alpha < kAlphaMin) continue;
    if (hit < 0) {
      hit = static_cast<int>(s.index);
      hit_depth = s.depth;
    }
    c += alpha * T * s.color;
    T *= 1.0 - alpha;
    if (T < kTransmittanceStop) break;
  }
  const std::size_t pix = static_cast<std::size_t>(y) * out.rgb.width + x;
  for (int ch = 0; ch < 3; ++ch) out.rgb.data[pix * 3 + ch] = static_cast<float>(std::clamp(c[ch], 0.0, 1.0));
  out.alpha.data[pix] = static_cast<float>(1.0 - T);
  out.hit[pix] = hit;
  out.depth[pix] = static_cast<float>(hit_depth);
}

// Runs body(i) for i in [0, n) on up to `threads` workers. Work items are
// independent and write disjoint pixels, so the split does not affect output.
template <typename Body>
void parallel_for(int n, int threads, Body body) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::optional<ProjectedSplat> project_splat(const Particle& particle, const Camera& camera) {
  const Vec3 t = camera.to_camera(particle.position);
  if (!(t.z() > camera.near_plane)) return std::nullopt;
  const double z = t.z();
  ProjectedSplat out;
  out.center = Vec2(camera.fx * t.x() / z + camera.cx, camera.fy * t.y() / z + camera.cy);
  out.depth = z;

  const Mat3 M = particle.rotation.normalized().toRotationMatrix() * particle.scale.asDiagonal();
  const Mat3 cov_cam = camera.rotation * (M * M.transpose()) * camera.rotation.transpose();
  Eigen::Matrix<double, 2, 3> J;
  J << camera.fx / z, 0.0, -camera.fx * t.x() / (z * z), 0.0, camera.fy / z, -camera.fy * t.y() / (z * z);
  Mat2 cov = J * cov_cam * J.transpose();
  cov(1, 0) = cov(0, 1);

  const Eigen::SelfAdjointEigenSolver<Mat2> eig(cov);
  const Vec2 lambda = eig.eigenvalues().cwiseMax(kCovFloor);
  out.cov = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  out.cov(1, 0) = out.cov(0, 1);
  return out;
}

RenderResult render(std::span<const Particle> particles, const Camera& camera, const RenderOptions& options) {
  camera.validate();
  const int W = camera.width, H = camera.height;
  RenderResult out;
  out.rgb = Image(W, H, 3);
  out.alpha = Image(W, H, 1);
  out.hit.assign(static_cast<std::size_t>(W) * H, -1);
  out.depth.assign(static_cast<std::size_t>(W) * H, 0.0f);

  const std::vector<Prepared> splats = prepare(particles, camera);

  if (!options.tiled) {
    std::vector<std::size_t> all(splats.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    parallel_for(H, options.threads, [&](int y) {
      for (int x = 0; x < W; ++x) shade(x, y, splats, all, out);
    });
    return out;
  }

  const int tiles_x = (W + kTileSize - 1) / kTileSize;
  const int tiles_y = (H + kTileSize - 1) / kTileSize;
  std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
  for (std::size_t k = 0; k < splats.size(); ++k) {
    const Prepared& s = splats[k];
    for (int ty = s.y0 / kTileSize; ty <= s.y1 / kTileSize; ++ty) {
      for (int tx = s.x0 / kTileSize; tx <= s.x1 / kTileSize; ++tx) bins[ty * tiles_x + tx].push_back(k);
    }
  }
  parallel_for(tiles_x * tiles_y, options.threads, [&](int tile) {
    const int tx = tile % tiles_x, ty = tile / tiles_x;
    const auto& bin = bins[tile];
    for (int y = ty * kTileSize; y < std::min(H, (ty + 1) * kTileSize); ++y) {
      for (int x = tx * kTileSize; x < std::min(W, (tx + 1) * kTileSize); ++x) shade(x, y, splats, bin, out);
    }
  });
  return out;
}

}  // namespace tissuesim::render
