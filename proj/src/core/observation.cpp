#include "tissuesim/core/observation.hpp"

#include <algorithm>
#include <string>

#include "tissuesim/core/error.hpp"

namespace tissuesim {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](auto v) { return v != 0; }));
}

void ObservationSet::validate() const {
  camera.validate();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.image.width != camera.width || f.image.height != camera.height || f.image.channels != 3) {
      throw Error(ErrorKind::validation,
                  "observation frame " + std::to_string(f.frame_index) + " does not match camera size");
    }
    if (f.mask.width != f.image.width || f.mask.height != f.image.height) {
      throw Error(ErrorKind::validation,
                  "mask of frame " + std::to_string(f.frame_index) + " does not align with its image");
    }
    if (i > 0 && f.frame_index <= frames[i - 1].frame_index) {
      throw Error(ErrorKind::validation, "observation frames must be sorted by index");
    }
  }
}

const ObservedFrame* ObservationSet::find(int frame_index) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame_index,
                             [](const ObservedFrame& f, int idx) { return f.frame_index < idx; });
  if (it == frames.end() || it->frame_index != frame_index) return nullptr;
  return &*it;
}

}  // namespace tissuesim
