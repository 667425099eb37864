#include "tissuesim/mpm/transfer.hpp"

#include <cmath>
#include <string>

#include "tissuesim/core/error.hpp"
#include "tissuesim/mpm/bspline.hpp"
#include "tissuesim/mpm/constitutive.hpp"

namespace tissuesim::mpm {

namespace {

StencilWeights particle_stencil(const Particle& p, const Grid& grid, int degree, std::size_t index) {
  const double inv_dx = grid.inv_dx();
  StencilWeights s;
  for (int d = 0; d < 3; ++d) {
    const double g = (p.position[d] - grid.domain_min()) * inv_dx;
    s.axis[d] = axis_weights(g, inv_dx, degree);
    if (s.axis[d].base < 0 || s.axis[d].base + degree > grid.resolution()) {
      throw Error(ErrorKind::stencil_clipped,
                  "particle " + std::to_string(index) + " stencil leaves the grid", index);
    }
  }
  return s;
}

template <int W>
void p2g_particle(const Particle& p, const Mat3& kirchhoff_volume, Grid& grid, const StencilWeights& s) {
  const double dx = grid.dx();
  const double origin = grid.domain_min();
  const std::size_t m = static_cast<std::size_t>(grid.nodes_per_axis());
  const auto& ax = s.axis;

  double off[3][W];
  for (int d = 0; d < 3; ++d) {
    for (int a = 0; a < W; ++a) off[d][a] = origin + (ax[d].base + a) * dx - p.position[d];
  }
  const Vec3 mv = p.mass * p.velocity;
  const Mat3 mC = p.mass * p.C;
  const std::size_t base = grid.index(ax[0].base, ax[1].base, ax[2].base);

  // Columns of mC times the z offsets, shared by every (a, b) row.
  Vec3 q[W];
  for (int c = 0; c < W; ++c) q[c] = mC.col(2) * off[2][c];

  for (int a = 0; a < W; ++a) {
    const Vec3 ca = mv + mC.col(0) * off[0][a];
    for (int b = 0; b < W; ++b) {
      const double wab = ax[0].w[a] * ax[1].w[b];
      const Vec3 cab = ca + mC.col(1) * off[1][b];
      // grad w = w_c (dw_a w_b, w_a dw_b, 0) + dw_c (0, 0, w_a w_b)
      const Vec3 fa = kirchhoff_volume.col(0) * (ax[0].dw[a] * ax[1].w[b]) +
                      kirchhoff_volume.col(1) * (ax[0].w[a] * ax[1].dw[b]);
      const Vec3 fb = kirchhoff_volume.col(2) * wab;
      for (int c = 0; c < W; ++c) {
        const std::size_t idx = base + (a * m + b) * m + c;
        grid.touch(idx);
        GridNode& node = grid.node(idx);
        const double w = wab * ax[2].w[c];
        node.mass += w * p.mass;
        node.momentum += w * (cab + q[c]);
        node.force -= ax[2].w[c] * fa + ax[2].dw[c] * fb;
      }
    }
  }
}

template <int W>
void g2p_particle(const Grid& grid, Particle& p, const StencilWeights& s, double apic) {
  const double dx = grid.dx();
  const double origin = grid.domain_min();
  const std::size_t m = static_cast<std::size_t>(grid.nodes_per_axis());
  const auto& ax = s.axis;

  double off[3][W];
  for (int d = 0; d < 3; ++d) {
    for (int a = 0; a < W; ++a) off[d][a] = origin + (ax[d].base + a) * dx - p.position[d];
  }
  const std::size_t base = grid.index(ax[0].base, ax[1].base, ax[2].base);
  // B = sum_i w_i v_i (x_i - x_p)^T, with the x and y offsets factored out
  // of the inner sums.
  Vec3 v = Vec3::Zero();
  Mat3 B = Mat3::Zero();
  for (int a = 0; a < W; ++a) {
    Vec3 va = Vec3::Zero();
    for (int b = 0; b < W; ++b) {
      Vec3 vab = Vec3::Zero();
      Vec3 zab = Vec3::Zero();
      for (int c = 0; c < W; ++c) {
        const std::size_t idx = base + (a * m + b) * m + c;
        const Vec3 wv = ax[2].w[c] * grid.node(idx).velocity;
        vab += wv;
        zab += wv * off[2][c];
      }
      const double wab = ax[0].w[a] * ax[1].w[b];
      vab *= wab;
      va += vab;
      B.col(1) += vab * off[1][b];
      B.col(2) += zab * wab;
    }
    v += va;
    B.col(0) += va * off[0][a];
  }
  p.velocity = v;
  p.C = apic * B;
}

void check_finite(const Particle& p, std::size_t index) {
  // NaN and inf both survive summation, so one finiteness test covers the state.
  const double probe = p.position.sum() + p.velocity.sum() + p.F_E.sum() + p.F_v.sum() + p.C.sum();
  if (!std::isfinite(probe)) {
    throw Error(ErrorKind::non_finite, "non-finite state in particle " + std::to_string(index), index);
  }
}

}  // namespace

double mass_epsilon(std::span<const Particle> particles) {
  if (particles.empty()) return 0.0;
  double total = 0.0;
  for (const auto& p : particles) total += p.mass;
  return 1e-12 * total / static_cast<double>(particles.size());
}

void p2g(std::span<const Particle> particles, const MaterialField& material, Grid& grid,
         const SimConfig& config, std::span<const Mat3> rotations, std::vector<StencilWeights>* stencils) {
  const int degree = config.spline_degree;
  if (stencils) stencils->resize(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Particle& p = particles[i];
    check_finite(p, i);
    const StencilWeights s = particle_stencil(p, grid, degree, i);
    if (stencils) (*stencils)[i] = s;

    const double J = p.F_E.determinant();
    if (!(J > 0.0)) {
      throw Error(ErrorKind::inverted_element, "inverted element in particle " + std::to_string(i), i);
    }
    const Mat3 R = rotations.empty() ? polar_rotation(p.F_E) : rotations[i];
    Mat3 tau = corotated_kirchhoff(p.F_E, R, material.mu[i], material.lambda[i]);
    if (material.eta[i] != 0.0) tau += J * viscous_stress(p.F_v, strain_rate(p.C), material.eta[i]);
    const Mat3 kv = p.volume0 * tau;

    if (degree == 2) {
      p2g_particle<3>(p, kv, grid, s);
    } else {
      p2g_particle<4>(p, kv, grid, s);
    }
  }
}

void grid_update(Grid& grid, double dt, const SimConfig& config, double mass_eps) {
  for (std::size_t idx : grid.active_nodes()) {
    GridNode& n = grid.node(idx);
    if (n.mass > mass_eps) {
      n.velocity = (n.momentum + dt * n.force) / n.mass;
    } else {
      n.velocity.setZero();
    }
    if (n.drive_count > 0) {
      n.velocity = n.drive_sum / static_cast<double>(n.drive_count);
    }
    const auto c = grid.node_coords(idx);
    const std::uint8_t faces = grid.boundary_faces(c[0], c[1], c[2]);
    if (faces == 0) continue;
    n.flags |= kDomainBoundary;
    for (int f = 0; f < 6; ++f) {
      if (!(faces & (1u << f))) continue;
      if (config.boundary[f] == BoundaryKind::sticky) {
        n.velocity.setZero();
        break;
      }
      n.velocity[f / 2] = 0.0;
    }
  }
}

void g2p(const Grid& grid, std::span<Particle> particles, const SimConfig& config,
         std::span<const StencilWeights> stencils) {
  const int degree = config.spline_degree;
  const double apic = apic_scale(grid.dx(), degree);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    Particle& p = particles[i];
    const StencilWeights s = stencils.empty() ? particle_stencil(p, grid, degree, i) : stencils[i];
    if (degree == 2) {
      g2p_particle<3>(grid, p, s, apic);
    } else {
      g2p_particle<4>(grid, p, s, apic);
    }
  }
}

void update_deformation(Particle& particle, double gamma, const Mat3& grad_v, double dt, std::size_t index) {
  if (dt * grad_v.norm() >= 0.5) {
    throw Error(ErrorKind::unstable_step,
                "velocity gradient too large for the time step in particle " + std::to_string(index), index);
  }
  const Mat3 FE = particle.F_E * (Mat3::Identity() + dt * grad_v);
  const Mat3 Fv = gamma == 0.0 ? particle.F_v
                               : Mat3(particle.F_v * (Mat3::Identity() + gamma * dt * strain_rate(grad_v)));
  if (!(FE.determinant() > 0.0) || !(Fv.determinant() > 0.0)) {
    throw Error(ErrorKind::inverted_element, "inverted element in particle " + std::to_string(index), index);
  }
  particle.F_E = FE;
  particle.F_v = Fv;
}

}  // namespace tissuesim::mpm
