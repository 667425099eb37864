#include "tissuesim/core/trajectory.hpp"

#include <string>

#include "tissuesim/core/error.hpp"

namespace tissuesim {

void Trajectory::validate() const {
  if (frames.size() < 2) throw Error(ErrorKind::validation, "trajectory needs at least 2 frames");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].frame_index <= frames[i - 1].frame_index) {
      throw Error(ErrorKind::validation,
                  "trajectory frame indices must be strictly increasing (at frame " +
                      std::to_string(frames[i].frame_index) + ")");
    }
  }
  for (const auto& f : frames) {
    if (!f.point.allFinite()) throw Error(ErrorKind::validation, "non-finite trajectory point");
  }
}

}  // namespace tissuesim
