#pragma once

#include "tissuesim/core/image.hpp"

namespace tissuesim::render {

struct MaskedL1 {
  double value = 0.0;
  bool empty_mask = false;  // set when the mask selects no pixel; value is 0
};

/// Sum of absolute channel differences over masked pixels divided by the
/// number of masked pixels. Throws validation on shape mismatch.
MaskedL1 masked_l1(const Image& a, const Image& b, const Mask& mask);

}  // namespace tissuesim::render
