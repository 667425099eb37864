#include "tissuesim/mpm/bspline.hpp"

#include <string>

namespace tissuesim::mpm {

StencilWeights bspline_weights(const Vec3& position, double domain_min, double dx, int resolution,
                               int degree) {
  const double inv_dx = 1.0 / dx;
  StencilWeights s;
  for (int d = 0; d < 3; ++d) {
    const double g = (position[d] - domain_min) * inv_dx;
    if (!std::isfinite(g)) throw Error(ErrorKind::non_finite, "non-finite particle position");
    s.axis[d] = axis_weights(g, inv_dx, degree);
    if (s.axis[d].base < 0 || s.axis[d].base + degree > resolution) {
      throw Error(ErrorKind::stencil_clipped,
                  "particle stencil leaves the grid along axis " + std::to_string(d));
    }
  }
  return s;
}

}  // namespace tissuesim::mpm
