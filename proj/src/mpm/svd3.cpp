#include "tissuesim/mpm/svd3.hpp"

#include <cmath>
#include <utility>

namespace tissuesim::mpm {

namespace {

// Any unit vector orthogonal to the unit vector a.
Vec3 any_orthogonal(const Vec3& a) {
  const Vec3 axis = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return a.cross(axis).normalized();
}

}  // namespace

Svd3 svd3(const Mat3& F) {
  Mat3 A = F.transpose() * F;
  Mat3 V = Mat3::Identity();

  const double scale = A.diagonal().squaredNorm();
  for (int sweep = 0; sweep < 12; ++sweep) {
    const double off = A(0, 1) * A(0, 1) + A(0, 2) * A(0, 2) + A(1, 2) * A(1, 2);
    if (off <= 1e-34 * scale) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const int r = 3 - p - q;
        const double arp = A(r, p), arq = A(r, q);
        A(p, p) -= t * apq;
        A(q, q) += t * apq;
        A(p, q) = A(q, p) = 0.0;
        A(r, p) = A(p, r) = c * arp - s * arq;
        A(r, q) = A(q, r) = s * arp + c * arq;
        for (int k = 0; k < 3; ++k) {
          const double vkp = V(k, p), vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  Vec3 lambda = A.diagonal();
  // Sort eigenpairs by decreasing eigenvalue.
  for (int i = 0; i < 2; ++i) {
    int best = i;
    for (int j = i + 1; j < 3; ++j) {
      if (lambda[j] > lambda[best]) best = j;
    }
    if (best != i) {
      std::swap(lambda[i], lambda[best]);
      V.col(i).swap(V.col(best));
    }
  }
  if (V.determinant() < 0.0) V.col(2) *= -1.0;

  Svd3 out;
  out.V = V;
  const Vec3 f0 = F * V.col(0);
  const Vec3 f1 = F * V.col(1);
  const double n0 = f0.norm();
  Vec3 u0 = n0 > 0.0 ? Vec3(f0 / n0) : Vec3::UnitX();
  Vec3 u1 = f1 - u0.dot(f1) * u0;
  const double n1 = u1.norm();
  u1 = n1 > 1e-300 ? Vec3(u1 / n1) : any_orthogonal(u0);
  const Vec3 u2 = u0.cross(u1);
  out.U.col(0) = u0;
  out.U.col(1) = u1;
  out.U.col(2) = u2;
  out.sigma = Vec3(u0.dot(f0), u1.dot(f1), u2.dot(F * V.col(2)));
  return out;
}

}  // namespace tissuesim::mpm
