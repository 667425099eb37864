#include "tissuesim/render/loss.hpp"

#include <cmath>

#include "tissuesim/core/error.hpp"

namespace tissuesim::render {

MaskedL1 masked_l1(const Image& a, const Image& b, const Mask& mask) {
  if (!a.same_shape(b) || a.channels != b.channels || mask.width != a.width || mask.height != a.height) {
    throw Error(ErrorKind::validation, "masked_l1: image and mask dimensions differ");
  }
  double sum = 0.0;
  std::size_t count = 0;
  const std::size_t c = static_cast<std::size_t>(a.channels);
  for (std::size_t pix = 0; pix < a.pixel_count(); ++pix) {
    if (!mask.data[pix]) continue;
    ++count;
    for (std::size_t k = 0; k < c; ++k) {
      sum += std::abs(static_cast<double>(a.data[pix * c + k]) - static_cast<double>(b.data[pix * c + k]));
    }
  }
  if (count == 0) return {0.0, true};
  return {sum / static_cast<double>(count), false};
}

}  // namespace tissuesim::render
