#pragma once

#include "tissuesim/core/types.hpp"

namespace tissuesim::mpm {

/// Rotation-variant SVD of a 3x3 matrix: F = U diag(sigma) V^T with U and V
/// proper rotations, sigma sorted by decreasing magnitude and any reflection
/// carried by the sign of sigma[2].
struct Svd3 {
  Mat3 U;
  Vec3 sigma;
  Mat3 V;
};

/// Cyclic Jacobi eigen-solve of F^T F followed by U = F V / sigma. Accurate to
/// a few ulps relative to |F| for well-conditioned F, which covers every
/// deformation gradient the solver accepts.
Svd3 svd3(const Mat3& F);

}  // namespace tissuesim::mpm
