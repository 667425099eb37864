#include "tissuesim/scene/thicken.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "tissuesim/core/error.hpp"
#include "tissuesim/scene/normalize.hpp"

namespace tissuesim::scene {

namespace {

struct Copy {
  std::size_t order;   // position in the uncapped output sequence
  std::size_t source;
  Vec3 position;
};

}  // namespace

ThickenResult thicken(const Scene& scene, const ThickenOptions& opt) {
  if (opt.layers < 1) throw Error(ErrorKind::validation, "thicken: layers must be >= 1");
  if (opt.z_expand < 0.0) throw Error(ErrorKind::validation, "thicken: z_expand must be >= 0");
  const std::size_t n = scene.particles.size();
  if (n == 0) throw Error(ErrorKind::validation, "empty scene");
  if (opt.cap && *opt.cap < n) {
    throw Error(ErrorKind::validation, "thicken: cap " + std::to_string(*opt.cap) + " is below the input count " +
                                           std::to_string(n));
  }

  // Work relative to the ray origin, where the algorithm scales toward zero.
  std::vector<Vec3> rel(n);
  for (std::size_t i = 0; i < n; ++i) rel[i] = scene.particles[i].position - opt.ray_origin;
  SceneBounds box{rel[0], rel[0]};
  for (const auto& r : rel) {
    box.min = box.min.cwiseMin(r);
    box.max = box.max.cwiseMax(r);
  }
  if (!(box.min.z() > 0.0)) {
    throw Error(ErrorKind::validation, "thicken: scene must lie at positive z relative to the ray origin");
  }
  box.max.z() *= 1.0 + opt.z_expand;

  // Reservoir sampling keeps memory bounded by the cap; without a cap every
  // kept copy is stored.
  const std::size_t room = opt.cap ? *opt.cap - n : static_cast<std::size_t>(-1);
  std::mt19937_64 rng(opt.seed);
  std::mt19937_64 pick(opt.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<Copy> kept;
  ThickenResult result;
  const double L = static_cast<double>(opt.layers);
  for (int l = 1; l <= opt.layers; ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 f;
      for (int d = 0; d < 3; ++d) f[d] = (unit_from_bits(rng()) + l) / L;
      const Vec3 pos = rel[i].cwiseProduct(f);
      ++result.candidates;
      if (!box.contains(pos)) continue;
      const std::size_t order = result.kept++;
      if (kept.size() < room) {
        kept.push_back({order, i, pos});
      } else if (room > 0) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(0, order)(pick);
        if (j < room) kept[j] = {order, i, pos};
      }
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Copy& a, const Copy& b) { return a.order < b.order; });
  result.capped = kept.size() < result.kept;
  result.emitted = kept.size();

  const bool copy_material = scene.material.mu.size() == n;
  Scene& out = result.scene;
  out = scene;
  out.particles.reserve(n + kept.size());
  for (const auto& c : kept) {
    Particle p = scene.particles[c.source];
    p.position = c.position + opt.ray_origin;
    out.particles.push_back(p);
    if (copy_material) out.material.push_back(scene.material.at(c.source), scene.material.cluster_id[c.source]);
  }
  return result;
}

}  // namespace tissuesim::scene
