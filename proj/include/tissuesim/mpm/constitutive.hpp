#pragma once

#include "tissuesim/core/types.hpp"

namespace tissuesim::mpm {

/// Cofactor matrix, J F^{-T} for invertible F.
Mat3 cofactor(const Mat3& F);

/// Rotation factor of the polar decomposition F = R S. Uses a scaled Newton
/// iteration when det F > 0 and otherwise the SVD F = U Sigma V^T, R = U V^T,
/// with the sign of the smallest singular direction flipped when det < 0.
Mat3 polar_rotation(const Mat3& F);

/// Fixed corotated energy mu sum (s_i - 1)^2 + lambda/2 (J - 1)^2.
double corotated_energy(const Mat3& F, double mu, double lambda);

/// First Piola-Kirchhoff stress dPsi/dF = 2 mu (F - R) + lambda (J - 1) J F^{-T}.
Mat3 corotated_piola(const Mat3& F, double mu, double lambda);

/// Kirchhoff stress J sigma = 2 mu (F - R) F^T + lambda (J - 1) J I for a
/// precomputed rotation factor R. Used on the hot path.
Mat3 corotated_kirchhoff(const Mat3& F, const Mat3& R, double mu, double lambda);

/// Cauchy stress of the fixed corotated model. Throws
/// ErrorKind::inverted_element when det F <= 0.
Mat3 corotated_stress(const Mat3& F_E, double mu, double lambda);

/// Viscous Cauchy stress det(F_v) * 2 eta D.
Mat3 viscous_stress(const Mat3& F_v, const Mat3& D, double eta);

/// Symmetric part of a velocity gradient.
inline Mat3 strain_rate(const Mat3& grad_v) { return 0.5 * (grad_v + grad_v.transpose()); }

}  // namespace tissuesim::mpm
