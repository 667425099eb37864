#pragma once

#include <vector>

#include "tissuesim/core/camera.hpp"
#include "tissuesim/core/image.hpp"

namespace tissuesim {

struct ObservedFrame {
  int frame_index = 0;
  Image image;
  Mask mask;
};

/// Target frames for parameter estimation, sorted by frame index.
struct ObservationSet {
  std::vector<ObservedFrame> frames;
  Camera camera;

  /// All images share the camera's dimensions and masks align with images.
  void validate() const;
  const ObservedFrame* find(int frame_index) const;
};

}  // namespace tissuesim
