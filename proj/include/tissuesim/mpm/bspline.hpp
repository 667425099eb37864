#pragma once

#include <array>
#include <cmath>

#include "tissuesim/core/error.hpp"
#include "tissuesim/core/types.hpp"

namespace tissuesim::mpm {

/// Per-axis B-spline weights over the (degree+1) support nodes starting at
/// `base`. Only the first `width` entries are meaningful.
struct AxisWeights {
  int base = 0;
  int width = 0;
  std::array<double, 4> w{};
  std::array<double, 4> dw{};  // d w / d x in world units
};

/// Weights and gradients for one particle: the 3D weight of node
/// (base + (a, b, c)) is w[0][a] * w[1][b] * w[2][c].
struct StencilWeights {
  std::array<AxisWeights, 3> axis;

  double weight(int a, int b, int c) const { return axis[0].w[a] * axis[1].w[b] * axis[2].w[c]; }
  Vec3 gradient(int a, int b, int c) const {
    return {axis[0].dw[a] * axis[1].w[b] * axis[2].w[c], axis[0].w[a] * axis[1].dw[b] * axis[2].w[c],
            axis[0].w[a] * axis[1].w[b] * axis[2].dw[c]};
  }
  int width() const { return axis[0].width; }
};

/// Weights along one axis. `g` is the particle coordinate in cell units
/// relative to node 0.
inline AxisWeights axis_weights(double g, double inv_dx, int degree) {
  AxisWeights a;
  a.width = degree + 1;
  if (degree == 2) {
    a.base = static_cast<int>(std::floor(g - 0.5));
    const double fx = g - a.base;  // in [0.5, 1.5)
    a.w = {0.5 * (1.5 - fx) * (1.5 - fx), 0.75 - (fx - 1.0) * (fx - 1.0), 0.5 * (fx - 0.5) * (fx - 0.5), 0.0};
    a.dw = {(fx - 1.5) * inv_dx, -2.0 * (fx - 1.0) * inv_dx, (fx - 0.5) * inv_dx, 0.0};
  } else if (degree == 3) {
    a.base = static_cast<int>(std::floor(g)) - 1;
    const double fx = g - a.base;  // in [1, 2)
    for (int k = 0; k < 4; ++k) {
      const double d = fx - k;
      const double ad = std::abs(d);
      const double sgn = d < 0.0 ? -1.0 : 1.0;
      if (ad < 1.0) {
        a.w[k] = 0.5 * ad * ad * ad - ad * ad + 2.0 / 3.0;
        a.dw[k] = sgn * (1.5 * ad * ad - 2.0 * ad) * inv_dx;
      } else if (ad < 2.0) {
        const double t = 2.0 - ad;
        a.w[k] = t * t * t / 6.0;
        a.dw[k] = -sgn * 0.5 * t * t * inv_dx;
      } else {
        a.w[k] = 0.0;
        a.dw[k] = 0.0;
      }
    }
  } else {
    throw Error(ErrorKind::validation, "unsupported B-spline degree " + std::to_string(degree));
  }
  return a;
}

/// Lowest support node index along an axis for grid coordinate g.
inline int stencil_base(double g, int degree) {
  return degree == 2 ? static_cast<int>(std::floor(g - 0.5)) : static_cast<int>(std::floor(g)) - 1;
}

/// True when the full (degree+1)^3 stencil of `position` lies on the grid.
inline bool stencil_fits(const Vec3& position, double domain_min, double inv_dx, int resolution,
                         int degree) {
  for (int d = 0; d < 3; ++d) {
    const double g = (position[d] - domain_min) * inv_dx;
    if (!std::isfinite(g)) return false;
    const int base = stencil_base(g, degree);
    if (base < 0 || base + degree > resolution) return false;
  }
  return true;
}

/// bspline_weights for a world position. Throws ErrorKind::stencil_clipped
/// when part of the stencil falls outside [0, resolution].
StencilWeights bspline_weights(const Vec3& position, double domain_min, double dx, int resolution,
                               int degree);

/// APIC affine scale factor 12 / (dx^2 (b + 1)); 4/dx^2 for quadratic.
inline double apic_scale(double dx, int degree) { return 12.0 / (dx * dx * (degree + 1)); }

}  // namespace tissuesim::mpm
