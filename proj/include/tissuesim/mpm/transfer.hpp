#pragma once

#include <span>
#include <vector>

#include "tissuesim/core/config.hpp"
#include "tissuesim/core/material.hpp"
#include "tissuesim/core/particle.hpp"
#include "tissuesim/mpm/bspline.hpp"
#include "tissuesim/mpm/grid.hpp"

namespace tissuesim::mpm {

/// Nodes whose mass does not exceed this are treated as empty.
double mass_epsilon(std::span<const Particle> particles);

/// Particle-to-grid transfer of mass, APIC momentum and the weak-form
/// internal force -sum_p V0_p J_p (sigma_E + sigma_v) grad w_ip.
///
/// `rotations`, when non-empty, supplies the polar rotation of each
/// particle's F_E so the transfer skips the per-particle polar decomposition.
/// `stencils`, when given, receives each particle's weights for reuse by g2p.
/// Throws non_finite / inverted_element / stencil_clipped with the particle index.
void p2g(std::span<const Particle> particles, const MaterialField& material, Grid& grid,
         const SimConfig& config, std::span<const Mat3> rotations = {},
         std::vector<StencilWeights>* stencils = nullptr);

/// v = (momentum + dt * force) / m on massive nodes, zero elsewhere; then
/// drive-region overrides, then domain boundary conditions.
void grid_update(Grid& grid, double dt, const SimConfig& config, double mass_epsilon);

/// Grid-to-particle transfer of velocity and the APIC affine matrix.
/// `stencils` may carry the weights p2g produced at the same positions.
void g2p(const Grid& grid, std::span<Particle> particles, const SimConfig& config,
         std::span<const StencilWeights> stencils = {});

/// F_E <- F_E (I + dt grad_v), F_v <- F_v (I + gamma dt D). Throws
/// unstable_step if dt |grad_v| >= 0.5 and inverted_element if either
/// determinant becomes non-positive.
void update_deformation(Particle& particle, double gamma, const Mat3& grad_v, double dt,
                        std::size_t index = 0);

}  // namespace tissuesim::mpm
