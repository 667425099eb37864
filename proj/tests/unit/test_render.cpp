#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "tissuesim/core/error.hpp"
#include "tissuesim/render/image_io.hpp"
#include "tissuesim/render/loss.hpp"
#include "tissuesim/render/rasterizer.hpp"
#include "test_support.hpp"

using namespace tissuesim;
using namespace tissuesim::render;

namespace {

Camera test_camera(int w = 64, int h = 48) {
  Camera c;
  c.width = w;
  c.height = h;
  c.fx = c.fy = 80.0;
  c.cx = w / 2.0;
  c.cy = h / 2.0;
  c.translation = Vec3(0, 0, 3);
  return c;
}

Particle splat(const Vec3& x, const Vec3& color, double opacity, double scale) {
  Particle p;
  p.position = x;
  p.color = color;
  p.opacity = opacity;
  p.scale = Vec3::Constant(scale);
  return p;
}

}  // namespace

TEST_CASE("project_splat") {
  const Camera cam = test_camera();
  SUBCASE("on-axis particle projects to the principal point") {
    const auto s = project_splat(splat(Vec3(0, 0, 1), Vec3::Ones(), 1.0, 0.05), cam);
    REQUIRE(s.has_value());
    CHECK(s->center.x() == cam.cx);
    CHECK(s->center.y() == cam.cy);
    CHECK(s->depth == 4.0);
  }
  SUBCASE("isotropic scale gives (f s / d)^2 I on the axis") {
    const double scale = 0.05, d = 4.0;
    const auto s = project_splat(splat(Vec3(0, 0, 1), Vec3::Ones(), 1.0, scale), cam);
    const double expected = std::pow(cam.fx * scale / d, 2);
    CHECK(s->cov(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(s->cov(1, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(s->cov(0, 1)) <= 1e-12);
  }
  SUBCASE("tiny splats are floored at 0.3 px^2") {
    const auto s = project_splat(splat(Vec3(0, 0, 1), Vec3::Ones(), 1.0, 1e-6), cam);
    CHECK(s->cov(0, 0) == doctest::Approx(kCovFloor));
    CHECK(s->cov(1, 1) == doctest::Approx(kCovFloor));
  }
  SUBCASE("particle behind the camera is culled") {
    CHECK_FALSE(project_splat(splat(Vec3(0, 0, -5), Vec3::Ones(), 1.0, 0.05), cam).has_value());
  }
}

TEST_CASE("render: basic compositing") {
  const Camera cam = test_camera();
  SUBCASE("empty scene") {
    const RenderResult r = render::render({}, cam);
    CHECK(std::all_of(r.rgb.data.begin(), r.rgb.data.end(), [](float v) { return v == 0.0f; }));
    CHECK(std::all_of(r.alpha.data.begin(), r.alpha.data.end(), [](float v) { return v == 0.0f; }));
    CHECK(r.hit_at(10, 10) == -1);
  }
  SUBCASE("one opaque splat over a pixel center") {
    // Place the splat exactly on pixel (32, 24)'s center.
    const Vec3 x = cam.unproject(32.5, 24.5, 4.0);
    const std::vector<Particle> ps = {splat(x, Vec3(0.2, 0.6, 0.9), 1.0, 0.1)};
    const RenderResult r = render::render(ps, cam);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(r.rgb.at(32, 24, c) - ps[0].color[c]) <= 1.0 / 255.0);
    CHECK(r.alpha.at(32, 24) == doctest::Approx(kAlphaMax));
    CHECK(r.hit_at(32, 24) == 0);
    CHECK(r.depth_at(32, 24) == doctest::Approx(4.0));
  }
  SUBCASE("two coincident splats: the front one wins") {
    const Vec3 front = cam.unproject(32.5, 24.5, 3.0), back = cam.unproject(32.5, 24.5, 5.0);
    const std::vector<Particle> ps = {splat(back, Vec3(1, 0, 0), 1.0, 0.1), splat(front, Vec3(0, 0, 1), 1.0, 0.1)};
    const RenderResult r = render::render(ps, cam);
    CHECK(quantize(r.rgb.at(32, 24, 0)) == 0);
    CHECK(quantize(r.rgb.at(32, 24, 2)) == 255);
    CHECK(r.hit_at(32, 24) == 1);
  }
  SUBCASE("outputs stay in [0, 1]") {
    std::mt19937 rng(1);
    const RenderResult r = render::render(testing::random_splats(rng, 300), cam);
    for (float v : r.rgb.data) CHECK((v >= 0.0f && v <= 1.0f));
    for (float v : r.alpha.data) CHECK((v >= 0.0f && v <= 1.0f));
  }
}

TEST_CASE("render: tiled path is bit-identical to the per-pixel loop") {
  std::mt19937 rng(2);
  const Camera cam = test_camera(70, 45);  // partial edge tiles
  for (int trial = 0; trial < 10; ++trial) {
    const auto ps = testing::random_splats(rng, 120);
    RenderOptions naive;
    naive.tiled = false;
    CHECK(testing::identical(render::render(ps, cam), render::render(ps, cam, naive)));
  }
}

TEST_CASE("render: independent of input order and thread count") {
  std::mt19937 rng(3);
  const Camera cam = test_camera();
  auto ps = testing::random_splats(rng, 200);
  const RenderResult a = render::render(ps, cam);
  std::vector<std::size_t> perm(ps.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Particle> shuffled;
  for (std::size_t i : perm) shuffled.push_back(ps[i]);
  const RenderResult b = render::render(shuffled, cam);
  CHECK(a.rgb == b.rgb);
  CHECK(a.alpha == b.alpha);
  CHECK(a.depth == b.depth);

  RenderOptions threaded;
  threaded.threads = 4;
  CHECK(testing::identical(a, render::render(ps, cam, threaded)));
}

TEST_CASE("render: translation equivariance") {
  // Dyadic coordinates keep the shifted arithmetic exact.
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> q(-64, 64);
  std::vector<Particle> ps;
  for (int i = 0; i < 80; ++i) {
    ps.push_back(splat(Vec3(q(rng), q(rng), q(rng)) / 64.0, Vec3(0.5, q(rng) / 128.0 + 0.5, 0.25), 0.75, 0.0625));
  }
  const Camera cam = test_camera();
  const Vec3 shift(0.5, -0.25, 2.0);
  Camera moved = cam;
  moved.translation = cam.translation - shift;
  std::vector<Particle> shifted = ps;
  for (auto& p : shifted) p.position += shift;
  CHECK(testing::identical(render::render(ps, cam), render::render(shifted, moved)));
}

TEST_CASE("masked_l1") {
  Image a(4, 3, 3, 0.0f), b(4, 3, 3, 1.0f);
  Mask full(4, 3, true), none(4, 3, false);
  CHECK(masked_l1(a, a, full).value == 0.0);
  CHECK(masked_l1(a, b, full).value == 3.0);
  const MaskedL1 e = masked_l1(a, b, none);
  CHECK(e.value == 0.0);
  CHECK(e.empty_mask);

  Mask half = full;
  for (int x = 0; x < 4; ++x) half.data[x] = 0;  // drop the first row
  b.at(0, 1, 0) = 0.5f;
  CHECK(masked_l1(a, b, half).value == doctest::Approx((7 * 3.0 + 2.5) / 8.0));
  CHECK_THROWS_AS(masked_l1(a, Image(5, 3), full), Error);
}

TEST_CASE("image IO round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "tissuesim_image_io";
  std::filesystem::create_directories(dir);
  Image img(5, 4, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<float>((i * 37) % 256) / 255.0f;
  write_png(img, dir / "a.png");
  const Image back = read_png(dir / "a.png");
  CHECK(back.width == 5);
  CHECK(back.height == 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(quantize(back.data[i]) == quantize(img.data[i]));
  CHECK(encode_png(img) == encode_png(back));

  Mask m(5, 4, false);
  m.data[3] = m.data[7] = 1;
  write_mask_png(m, dir / "m.png");
  CHECK(read_mask_png(dir / "m.png").data == m.data);

  write_raw(img, dir / "a.raw");
  CHECK(read_raw(dir / "a.raw", 5, 4, 3) == img);
  CHECK_THROWS_AS(read_raw(dir / "a.raw", 4, 4, 3), Error);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), Error);
  CHECK_THROWS_AS(decode_png({1, 2, 3}), Error);
  std::filesystem::remove_all(dir);
}
