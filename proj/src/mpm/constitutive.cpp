#include "tissuesim/mpm/constitutive.hpp"

#include <Eigen/LU>
#include <cmath>

#include "tissuesim/core/error.hpp"
#include "tissuesim/mpm/svd3.hpp"

namespace tissuesim::mpm {

namespace {

Svd3 rotation_variant_svd(const Mat3& F) { return svd3(F); }

}  // namespace

Mat3 cofactor(const Mat3& F) {
  Mat3 cof;
  cof.col(0) = F.col(1).cross(F.col(2));
  cof.col(1) = F.col(2).cross(F.col(0));
  cof.col(2) = F.col(0).cross(F.col(1));
  return cof;
}

Mat3 polar_rotation(const Mat3& F) {
  // Scaled Newton iteration X <- (g X + (g X)^{-T}) / 2 converges
  // quadratically to the rotation factor when det F > 0. Near-rigid F, the
  // common case inside a step, takes three or four iterations.
  const double J0 = F.determinant();
  if (J0 > 0.0 && std::isfinite(J0)) {
    Mat3 X = F;
    double J = J0;
    bool scaled = true;
    for (int it = 0; it < 40; ++it) {
      const double g = scaled ? std::cbrt(1.0 / J) : 1.0;
      const Mat3 next = 0.5 * (g * X + cofactor(X) / (g * J));
      const double change = (next - X).squaredNorm();
      X = next;
      if (change < 1e-4) scaled = false;
      if (change < 1e-20) return X;
      J = X.determinant();
      if (!(J > 0.0)) break;
    }
  }
  const Svd3 s = rotation_variant_svd(F);
  return s.U * s.V.transpose();
}

double corotated_energy(const Mat3& F, double mu, double lambda) {
  const Svd3 s = rotation_variant_svd(F);
  const double J = F.determinant();
  return mu * (s.sigma.array() - 1.0).square().sum() + 0.5 * lambda * (J - 1.0) * (J - 1.0);
}

Mat3 corotated_piola(const Mat3& F, double mu, double lambda) {
  const Mat3 R = polar_rotation(F);
  const double J = F.determinant();
  // J F^{-T} is the cofactor matrix, defined for singular F as well.
  const Mat3 cof = cofactor(F);
  return 2.0 * mu * (F - R) + lambda * (J - 1.0) * cof;
}

Mat3 corotated_kirchhoff(const Mat3& F, const Mat3& R, double mu, double lambda) {
  const double J = F.determinant();
  Mat3 tau = 2.0 * mu * (F - R) * F.transpose();
  tau.diagonal().array() += lambda * (J - 1.0) * J;
  return tau;
}

Mat3 corotated_stress(const Mat3& F_E, double mu, double lambda) {
  const double J = F_E.determinant();
  if (!(J > 0.0)) throw Error(ErrorKind::inverted_element, "inverted element: det(F_E) <= 0");
  Mat3 sigma = corotated_kirchhoff(F_E, polar_rotation(F_E), mu, lambda) / J;
  // Exact symmetry; the Kirchhoff stress is symmetric up to rounding.
  return 0.5 * (sigma + sigma.transpose());
}

Mat3 viscous_stress(const Mat3& F_v, const Mat3& D, double eta) {
  if (eta == 0.0) return Mat3::Zero();
  return F_v.determinant() * 2.0 * eta * D;
}

}  // namespace tissuesim::mpm
