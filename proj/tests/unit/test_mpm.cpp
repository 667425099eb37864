#include <cmath>
#include <map>
#include <random>

#include <Eigen/SVD>

#include "doctest.h"
#include "tissuesim/core/error.hpp"
#include "tissuesim/mpm/bspline.hpp"
#include "tissuesim/mpm/constitutive.hpp"
#include "tissuesim/mpm/simulator.hpp"
#include "tissuesim/mpm/svd3.hpp"
#include "tissuesim/mpm/transfer.hpp"
#include "test_support.hpp"

using namespace tissuesim;
using namespace tissuesim::mpm;

TEST_CASE("quadratic weights at a node and partition of unity") {
  SimConfig cfg;
  const double dx = cfg.dx();
  // Node (25, 25, 25) sits at the origin.
  auto s = bspline_weights(Vec3::Zero(), cfg.domain_min, dx, cfg.grid_resolution, 2);
  CHECK(s.weight(1, 1, 1) == doctest::Approx(0.421875).epsilon(1e-15));
  CHECK(s.axis[0].base == 24);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (int degree : {2, 3}) {
    for (int trial = 0; trial < 200; ++trial) {
      const Vec3 x(u(rng), u(rng), u(rng));
      auto w = bspline_weights(x, cfg.domain_min, dx, cfg.grid_resolution, degree);
      double sum = 0.0;
      Vec3 gsum = Vec3::Zero();
      const int W = degree + 1;
      for (int a = 0; a < W; ++a) {
        CHECK(w.axis[a % 3].w[a] >= 0.0);
        for (int b = 0; b < W; ++b) {
          for (int c = 0; c < W; ++c) {
            sum += w.weight(a, b, c);
            gsum += w.gradient(a, b, c);
          }
        }
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      CHECK(gsum.norm() <= 1e-10);
    }
  }
}

TEST_CASE("B-spline gradients match finite differences of the weights") {
  const double dx = 0.04, inv_dx = 25.0, h = 1e-7;
  for (int degree : {2, 3}) {
    for (double g : {10.13, 10.5, 10.77, 11.49}) {
      const auto a = axis_weights(g, inv_dx, degree);
      const auto ap = axis_weights(g + h * inv_dx, inv_dx, degree);
      const auto am = axis_weights(g - h * inv_dx, inv_dx, degree);
      if (ap.base != a.base || am.base != a.base) continue;
      for (int k = 0; k <= degree; ++k) {
        CHECK(a.dw[k] == doctest::Approx((ap.w[k] - am.w[k]) / (2 * h)).epsilon(1e-6));
      }
    }
  }
  (void)dx;
}

TEST_CASE("stencil clipping near the domain edge") {
  SimConfig cfg;
  CHECK_THROWS_AS(bspline_weights(Vec3(0.99, 0, 0), cfg.domain_min, cfg.dx(), cfg.grid_resolution, 2), Error);
  try {
    bspline_weights(Vec3(0, 0, -0.995), cfg.domain_min, cfg.dx(), cfg.grid_resolution, 2);
    FAIL("expected stencil error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::stencil_clipped);
  }
}

TEST_CASE("APIC scale factor") {
  CHECK(apic_scale(0.04, 2) == doctest::Approx(2500.0).epsilon(1e-14));
  CHECK(apic_scale(0.1, 3) == doctest::Approx(300.0).epsilon(1e-14));
}

TEST_CASE("p2g: single resting particle") {
  SimConfig cfg;
  Scene s = testing::single_particle(Vec3(0.013, -0.021, 0.0071));
  Grid grid(cfg);
  p2g(s.particles, s.material, grid, cfg);
  CHECK(grid.active_nodes().size() == 27);
  double m = 0.0;
  for (auto idx : grid.active_nodes()) {
    m += grid.node(idx).mass;
    CHECK(grid.node(idx).momentum.norm() == 0.0);
    CHECK(grid.node(idx).force.norm() == 0.0);
  }
  CHECK(m == doctest::Approx(s.particles[0].mass).epsilon(1e-14));
}

TEST_CASE("p2g matches a brute-force stencil-sum oracle") {
  SimConfig cfg;
  std::mt19937_64 rng(11);
  Scene s = testing::random_block(rng, 40, Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2));
  std::normal_distribution<double> n01;
  for (auto& p : s.particles) {
    p.velocity = Vec3(n01(rng), n01(rng), n01(rng));
    for (int k = 0; k < 9; ++k) p.C.data()[k] = n01(rng);
  }
  Grid grid(cfg);
  p2g(s.particles, s.material, grid, cfg);

  const auto oracle = testing::brute_force_p2g(s.particles, cfg);
  REQUIRE(oracle.size() == grid.active_nodes().size());
  for (const auto& [key, node] : oracle) {
    const auto& g = grid.node(key[0], key[1], key[2]);
    CHECK(std::abs(g.mass - node.mass) <= 1e-13);
    CHECK((g.momentum - node.momentum).norm() <= 1e-12);
  }
}

TEST_CASE("p2g: rigid translation yields uniform node velocity") {
  SimConfig cfg;
  std::mt19937_64 rng(5);
  Scene s = testing::random_block(rng, 200, Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2));
  const Vec3 u(0.3, -0.1, 0.25);
  for (auto& p : s.particles) p.velocity = u;
  Grid grid(cfg);
  p2g(s.particles, s.material, grid, cfg);
  grid_update(grid, cfg.dt, cfg, mass_epsilon(s.particles));
  for (auto idx : grid.active_nodes()) {
    const auto& n = grid.node(idx);
    if (n.mass > mass_epsilon(s.particles)) CHECK((n.velocity - u).norm() <= 1e-12);
  }
}

TEST_CASE("p2g: pure affine particle reproduces v(x) = C (x - x_p) on its stencil") {
  SimConfig cfg;
  Scene s = testing::single_particle(Vec3(0.0137, 0.051, -0.0333));
  Mat3 A;
  A << 0.3, -1.2, 0.5, 2.0, 0.1, -0.7, 0.4, 0.9, -0.2;
  s.particles[0].C = A;
  Grid grid(cfg);
  p2g(s.particles, s.material, grid, cfg);
  grid_update(grid, 0.0, cfg, 0.0);
  for (auto idx : grid.active_nodes()) {
    const auto& n = grid.node(idx);
    if (n.mass == 0.0) continue;
    const Vec3 expect = A * (grid.node_position(idx) - s.particles[0].position);
    CHECK((n.velocity - expect).norm() <= 1e-12);
  }
}

TEST_CASE("grid_update") {
  SimConfig cfg;
  Scene s = testing::single_particle(Vec3(0.1, 0.1, 0.1));
  s.particles[0].velocity = Vec3(1, 2, 3);
  const double eps = mass_epsilon(s.particles);

  SUBCASE("zero force leaves velocities unchanged") {
    Grid grid(cfg);
    p2g(s.particles, s.material, grid, cfg);
    grid_update(grid, cfg.dt, cfg, eps);
    for (auto idx : grid.active_nodes()) {
      const auto& n = grid.node(idx);
      if (n.mass > eps) CHECK((n.velocity - Vec3(1, 2, 3)).norm() <= 1e-12);
    }
  }
  SUBCASE("drive override wins regardless of prior state") {
    Grid grid(cfg);
    p2g(s.particles, s.material, grid, cfg);
    const std::vector<std::size_t> tagged{0};
    motion::drive_nodes(grid, s.particles, tagged, Vec3(2.5, 0, 0), cfg);
    grid_update(grid, cfg.dt, cfg, eps);
    int flagged = 0;
    for (auto idx : grid.active_nodes()) {
      const auto& n = grid.node(idx);
      if (n.flags & kDriveRegion) {
        ++flagged;
        CHECK(n.velocity == Vec3(2.5, 0, 0));
      }
    }
    CHECK(flagged == 27);
  }
  SUBCASE("sticky and slip faces") {
    Grid grid(cfg);
    // A particle low enough that its stencil reaches the -z boundary layer.
    Scene low = testing::single_particle(Vec3(0.1, 0.1, -1.0 + 1.6 * cfg.dx()));
    low.particles[0].velocity = Vec3(1, 2, -3);
    p2g(low.particles, low.material, grid, cfg);
    grid_update(grid, cfg.dt, cfg, eps);
    int boundary_nodes = 0;
    for (auto idx : grid.active_nodes()) {
      const auto c = grid.node_coords(idx);
      if (c[2] < cfg.boundary_cells) {
        ++boundary_nodes;
        CHECK(grid.node(idx).velocity == Vec3::Zero());
        CHECK((grid.node(idx).flags & kDomainBoundary) != 0);
      }
    }
    CHECK(boundary_nodes > 0);

    SimConfig slip = cfg;
    slip.boundary[static_cast<int>(Face::neg_z)] = BoundaryKind::slip;
    Grid g2(slip);
    p2g(low.particles, low.material, g2, slip);
    grid_update(g2, slip.dt, slip, eps);
    for (auto idx : g2.active_nodes()) {
      const auto c = g2.node_coords(idx);
      const auto& n = g2.node(idx);
      if (c[2] < slip.boundary_cells && n.mass > eps) {
        CHECK(n.velocity.z() == 0.0);
        CHECK(n.velocity.x() == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("g2p: uniform and affine grid fields") {
  SimConfig cfg;
  std::mt19937_64 rng(9);
  Scene s = testing::random_block(rng, 50, Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5));
  Grid grid(cfg);
  p2g(s.particles, s.material, grid, cfg);  // activates the stencil nodes

  SUBCASE("uniform") {
    const Vec3 u(0.2, -0.7, 1.1);
    for (auto idx : grid.active_nodes()) grid.node(idx).velocity = u;
    g2p(grid, s.particles, cfg);
    for (const auto& p : s.particles) {
      CHECK((p.velocity - u).norm() <= 1e-12);
      CHECK(p.C.norm() <= 1e-9);
    }
  }
  SUBCASE("affine") {
    Mat3 A;
    A << 0.5, -1.0, 2.0, 0.3, 0.0, -0.4, 1.5, 0.25, -0.75;
    const Vec3 c(0.1, -0.2, 0.05);
    for (auto idx : grid.active_nodes()) grid.node(idx).velocity = A * (grid.node_position(idx) - c);
    g2p(grid, s.particles, cfg);
    for (const auto& p : s.particles) {
      CHECK((p.C - A).norm() <= 1e-8);
      CHECK((p.velocity - A * (p.position - c)).norm() <= 1e-10);
    }
  }
}

TEST_CASE("APIC round trip reproduces constant and affine fields") {
  SimConfig cfg;
  std::mt19937_64 rng(21);
  const Vec3 c(0.05, 0.02, -0.03);
  Mat3 A;
  A << 0.2, -0.5, 0.1, 0.4, -0.1, 0.3, -0.2, 0.6, -0.1;
  // Dense block so every stencil node of an interior particle receives mass.
  Scene s = testing::lattice_block(Vec3(-0.3, -0.3, -0.3), Vec3(0.3, 0.3, 0.3), cfg.dx() / 2);
  for (auto& p : s.particles) {
    p.velocity = A * (p.position - c);
    p.C = A;
  }
  Grid grid(cfg);
  p2g(s.particles, s.material, grid, cfg);
  grid_update(grid, 0.0, cfg, mass_epsilon(s.particles));
  Scene out = s;
  g2p(grid, out.particles, cfg);
  int interior = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s.particles[i].position.array().abs() > 0.3 - 2 * cfg.dx()).any()) continue;
    ++interior;
    CHECK((out.particles[i].velocity - s.particles[i].velocity).norm() <= 1e-8);
    CHECK((out.particles[i].C - A).norm() <= 1e-8);
  }
  CHECK(interior > 100);
}

TEST_CASE("corotated stress") {
  SUBCASE("rest state") { CHECK(corotated_stress(Mat3::Identity(), 3.0, 7.0).norm() == 0.0); }
  SUBCASE("pure rotations") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
      const Mat3 Q = testing::random_rotation(rng);
      CHECK(corotated_stress(Q, 2.0, 5.0).norm() <= 1e-10);
    }
  }
  SUBCASE("uniaxial stretch hand value") {
    Mat3 F = Mat3::Identity();
    F(0, 0) = 1.1;
    const Mat3 s = corotated_stress(F, 1.0, 0.0);
    Mat3 expect = Mat3::Zero();
    expect(0, 0) = 0.2;
    CHECK((s - expect).norm() <= 1e-14);
  }
  SUBCASE("symmetric and objective") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) {
      const Mat3 F = testing::random_deformation(rng, 0.5, 2.0);
      const Mat3 Q = testing::random_rotation(rng);
      const Mat3 s = corotated_stress(F, 1.3, 4.1);
      CHECK((s - s.transpose()).norm() <= 1e-9);
      const Mat3 sq = corotated_stress(Q * F, 1.3, 4.1);
      CHECK((sq - Q * s * Q.transpose()).norm() <= 1e-8 * std::max(1.0, s.norm()));
    }
  }
  SUBCASE("inverted input") {
    Mat3 F = Mat3::Identity();
    F(2, 2) = -1.0;
    CHECK_THROWS_AS(corotated_stress(F, 1.0, 1.0), Error);
  }
}

TEST_CASE("corotated Piola stress matches central differences of the energy") {
  std::mt19937_64 rng(4);
  const double mu = 1.7, lambda = 3.2, h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 F = testing::random_deformation(rng, 0.5, 2.0);
    const Mat3 P = corotated_piola(F, mu, lambda);
    Mat3 fd;
    for (int k = 0; k < 9; ++k) {
      Mat3 Fp = F, Fm = F;
      Fp.data()[k] += h;
      Fm.data()[k] -= h;
      fd.data()[k] = (corotated_energy(Fp, mu, lambda) - corotated_energy(Fm, mu, lambda)) / (2 * h);
    }
    CHECK((P - fd).norm() <= 1e-4 * std::max(1.0, P.norm()));
  }
}

TEST_CASE("Kirchhoff form agrees with the Piola route") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 F = testing::random_deformation(rng, 0.5, 2.0);
    const Mat3 tau = corotated_kirchhoff(F, polar_rotation(F), 2.0, 3.0);
    CHECK((tau - corotated_piola(F, 2.0, 3.0) * F.transpose()).norm() <= 1e-10 * std::max(1.0, tau.norm()));
  }
}

TEST_CASE("viscous stress") {
  Mat3 D = Mat3::Zero();
  D(0, 0) = 0.1;
  CHECK(viscous_stress(Mat3::Identity(), D, 0.0) == Mat3::Zero());
  const Mat3 s = viscous_stress(Mat3::Identity(), D, 2.0);
  Mat3 expect = Mat3::Zero();
  expect(0, 0) = 0.4;
  CHECK(s == expect);
  std::mt19937_64 rng(6);
  const Mat3 Fv = testing::random_deformation(rng, 0.8, 1.2);
  CHECK(viscous_stress(Fv, Mat3::Zero(), 3.0) == Mat3::Zero());
  // det(F_v) * 2 eta D, exactly
  Mat3 D2;
  D2 << 0.5, 0.25, 0, 0.25, -1, 0.125, 0, 0.125, 0.75;
  const Mat3 s2 = viscous_stress(Fv, D2, 1.5);
  CHECK(s2 == Mat3(Fv.determinant() * 2.0 * 1.5 * D2));
  CHECK((s2 - s2.transpose()).norm() == 0.0);
}

TEST_CASE("update_deformation") {
  Particle p;
  SUBCASE("zero velocity gradient") {
    p.F_E = Mat3::Identity() * 1.1;
    p.F_v = Mat3::Identity() * 0.9;
    const Particle before = p;
    update_deformation(p, 2.0, Mat3::Zero(), 0.1);
    CHECK(p.F_E == before.F_E);
    CHECK(p.F_v == before.F_v);
  }
  SUBCASE("gamma zero leaves F_v") {
    Mat3 g;
    g << 0.1, 0.2, 0, -0.3, 0.05, 0, 0, 0, 0.2;
    update_deformation(p, 0.0, g, 0.1);
    CHECK(p.F_v == Mat3::Identity());
  }
  SUBCASE("stretch hand value") {
    Mat3 g = Mat3::Zero();
    g(0, 0) = 1.0;
    update_deformation(p, 1.0, g, 0.1);
    Mat3 expect = Mat3::Identity();
    expect(0, 0) = 1.1;
    CHECK((p.F_E - expect).norm() <= 1e-15);
    CHECK((p.F_v - expect).norm() <= 1e-15);  // gamma = 1, D = g
  }
  SUBCASE("inversion and stability guards") {
    Mat3 g = Mat3::Zero();
    g(0, 0) = -12.0;  // dt |grad v| = 1.2
    try {
      update_deformation(p, 0.0, g, 0.1);
      FAIL("expected stability guard");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::unstable_step);
    }
    g(0, 0) = -1.0;
    Particle q;
    q.F_E = Mat3::Identity();
    q.F_E(0, 0) = 1e-3;
    // F_v inverted by a large gamma
    try {
      update_deformation(q, 30.0, g, 0.1, 17);
      FAIL("expected inversion");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::inverted_element);
      CHECK(e.particle() == std::size_t{17});
    }
  }
}

TEST_CASE("step: rest scene stays at rest") {
  SimConfig cfg;
  std::mt19937_64 rng(12);
  Scene s = testing::random_block(rng, 100, Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2));
  Simulator sim(s, cfg);
  for (int i = 0; i < 1000; ++i) sim.step();
  double worst = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    worst = std::max(worst, (sim.scene().particles[i].position - s.particles[i].position).norm());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("step: mass is constant and momentum conserved for a free block") {
  SimConfig cfg;
  std::mt19937_64 rng(13);
  Scene s = testing::random_block(rng, 300, Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2));
  Mat3 A;
  A << 0, -2, 0.5, 2, 0.3, 0, -0.5, 0, -0.3;
  for (auto& p : s.particles) {
    p.velocity = Vec3(0.5, -0.2, 0.1) + A * p.position;
    p.C = A;
  }
  Vec3 p0 = Vec3::Zero();
  double m0 = 0.0;
  for (const auto& p : s.particles) {
    p0 += p.mass * p.velocity;
    m0 += p.mass;
  }
  Simulator sim(s, cfg);
  for (int i = 0; i < 300; ++i) {
    const auto d = sim.step();
    CHECK(d.total_mass == m0);
    CHECK(std::abs(d.grid_mass - m0) <= 1e-12 * m0);
    CHECK((d.total_momentum - p0).norm() <= 1e-10 * p0.norm());
  }
}

TEST_CASE("step: translation drive keeps the total mass fixed") {
  SimConfig cfg;
  std::mt19937_64 rng(14);
  Scene s = testing::random_block(rng, 200, Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2));
  Simulator sim(s, cfg);
  motion::Drive d;
  for (std::size_t i = 0; i < s.size(); ++i) d.tagged.push_back(i);
  d.velocity = [](double) { return std::optional<Vec3>(Vec3(1.0, 0, 0)); };
  sim.add_drive(d);
  double m0 = 0.0;
  for (const auto& p : s.particles) m0 += p.mass;
  for (int i = 0; i < 200; ++i) CHECK(sim.step().total_mass == m0);
  for (const auto& p : sim.scene().particles) CHECK((p.velocity - Vec3(1, 0, 0)).norm() <= 1e-12);
}

TEST_CASE("step: CFL guard raises instead of clamping") {
  SimConfig cfg;
  Scene s = testing::single_particle(Vec3::Zero());
  s.particles[0].velocity = Vec3(500.0, 0, 0);  // dt * |v| = 0.05 > dx = 0.04
  Simulator sim(s, cfg);
  try {
    sim.step();
    FAIL("expected CFL error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::cfl_violation);
    CHECK(e.step() == 0L);
  }
}

TEST_CASE("step: non-finite state aborts with the particle index") {
  SimConfig cfg;
  std::mt19937_64 rng(15);
  Scene s = testing::random_block(rng, 10, Vec3(-0.1, -0.1, -0.1), Vec3(0.1, 0.1, 0.1));
  s.particles[6].velocity.x() = std::nan("");
  Simulator sim(s, cfg);
  try {
    sim.step();
    FAIL("expected non-finite error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::non_finite);
    CHECK(e.particle() == std::size_t{6});
  }
}

TEST_CASE("step: splat rotations follow the polar rotation of F_E") {
  SimConfig cfg;
  std::mt19937_64 rng(16);
  Scene s = testing::lattice_block(Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2), cfg.dx() / 2);
  Mat3 W;  // spin about z
  W << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  for (auto& p : s.particles) {
    p.velocity = W * p.position;
    p.C = W;
  }
  Simulator sim(s, cfg);
  for (int i = 0; i < 200; ++i) sim.step();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& p = sim.scene().particles[i];
    CHECK(std::abs(p.rotation.norm() - 1.0) <= 1e-6);
    const Mat3 expected = polar_rotation(p.F_E) * s.particles[i].rotation.toRotationMatrix();
    CHECK((p.rotation.toRotationMatrix() - expected).norm() <= 1e-9);
  }
}

TEST_CASE("determinism: identical inputs give bit-identical snapshots") {
  SimConfig cfg;
  std::mt19937_64 rng(17);
  Scene s = testing::random_block(rng, 150, Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2));
  s.material = MaterialField::uniform(s.size(), {50.0, 450.0, 0.5, 1.0});
  for (auto& p : s.particles) p.velocity = Vec3(p.position.y(), -p.position.x(), 0.3 * p.position.z());
  auto a = run(s, cfg, {}, 800, 200);
  auto b = run(s, cfg, {}, 800, 200);
  REQUIRE(a.size() == 4);
  CHECK(a == b);
}

TEST_CASE("run frame accounting") {
  SimConfig cfg;
  Scene s = testing::single_particle(Vec3::Zero());
  SUBCASE("zero steps gives the input") {
    auto frames = run(s, cfg, {}, 0, cfg.frame_stride());
    REQUIRE(frames.size() == 1);
    CHECK(frames[0] == s);
  }
  SUBCASE("80k steps at the default stride give 200 frames") {
    CHECK(frame_count(80000, 400) == 200);
    Simulator sim(s, cfg);
    long frames = 0, diags = 0;
    run(sim, 80000, cfg.frame_stride(), [&](long, const Scene&) { ++frames; },
        [&](long, const StepDiagnostics&) { ++diags; });
    CHECK(frames == 200);
    CHECK(diags == 200);
    CHECK(sim.steps_taken() == 80000);
  }
}

TEST_CASE("run: drive ends at its final keyframe and the tissue is released") {
  SimConfig cfg;
  std::mt19937_64 rng(18);
  Scene s = testing::random_block(rng, 100, Vec3(-0.2, -0.2, -0.2), Vec3(0.2, 0.2, 0.2));
  Trajectory traj;
  traj.region_radius = 0.1;
  traj.frames = {{0, Vec3::Zero()}, {63, Vec3(0.0, 0.0, 0.0)}};
  CHECK(motion::drive_velocity(traj, 25199 * cfg.dt, cfg.frame_dt).has_value());
  CHECK_FALSE(motion::drive_velocity(traj, 25200 * cfg.dt, cfg.frame_dt).has_value());

  // A short schedule: the drive covers frame 0 only (steps [0, 400)).
  traj.frames = {{0, Vec3::Zero()}, {1, Vec3(0.004, 0, 0)}};
  Simulator sim(s, cfg);
  sim.add_drive(motion::Drive::from_trajectory(s.particles, traj, cfg.frame_dt));
  bool flagged_before = false, flagged_after = false;
  for (int i = 0; i < 402; ++i) {
    sim.step();
    bool any = false;
    for (auto idx : sim.grid().active_nodes()) any |= (sim.grid().node(idx).flags & kDriveRegion) != 0;
    if (i < 400) flagged_before |= any;
    else flagged_after |= any;
  }
  CHECK(flagged_before);
  CHECK_FALSE(flagged_after);
}

TEST_CASE("svd3 agrees with Eigen's JacobiSVD") {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 500; ++trial) {
    Mat3 F = trial % 3 == 0 ? testing::random_rotation(rng) : testing::random_deformation(rng, 0.3, 3.0);
    if (trial % 7 == 0) F.col(0) *= -1.0;  // reflections
    const Svd3 s = svd3(F);
    CHECK((s.U * s.sigma.asDiagonal() * s.V.transpose() - F).norm() <= 1e-13 * F.norm());
    CHECK((s.U.transpose() * s.U - Mat3::Identity()).norm() <= 1e-14);
    CHECK((s.V.transpose() * s.V - Mat3::Identity()).norm() <= 1e-14);
    CHECK(s.U.determinant() > 0.0);
    CHECK(s.V.determinant() > 0.0);
    Eigen::JacobiSVD<Mat3> ref(F);
    CHECK((s.sigma.cwiseAbs() - ref.singularValues()).norm() <= 1e-13 * F.norm());
    if (F.determinant() < 0.0) CHECK(s.sigma[2] < 0.0);
  }
  const Svd3 z = svd3(Mat3::Zero());
  CHECK(z.sigma.norm() == 0.0);
  CHECK(z.U.determinant() == doctest::Approx(1.0));
}

TEST_CASE("polar_rotation matches U V^T from Eigen's SVD") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    Mat3 F = testing::random_deformation(rng, 0.1, 10.0);
    if (trial % 5 == 0) F = testing::random_rotation(rng) * Vec3(20.0, 1.0, 0.05).asDiagonal();
    Eigen::JacobiSVD<Mat3> ref(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 expected = ref.matrixU() * ref.matrixV().transpose();
    const Mat3 R = polar_rotation(F);
    CHECK((R - expected).norm() <= 1e-11);
    CHECK((R.transpose() * R - Mat3::Identity()).norm() <= 1e-13);
    // R^T F is the symmetric stretch.
    const Mat3 S = R.transpose() * F;
    CHECK((S - S.transpose()).norm() <= 1e-12 * F.norm());
  }
  // Reflected input falls back to the SVD route and stays a proper rotation.
  Mat3 F = Vec3(1.0, 2.0, -0.5).asDiagonal();
  CHECK(polar_rotation(F).determinant() == doctest::Approx(1.0));
}
