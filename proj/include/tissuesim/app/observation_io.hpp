#pragma once

#include <filesystem>

#include "tissuesim/core/observation.hpp"

namespace tissuesim::app {

/// Directory layout: camera.json, frame_NNNN.png and optional mask_NNNN.png.
/// A frame without a mask file is supervised on every pixel.
ObservationSet load_observations(const std::filesystem::path& dir);
void save_observations(const ObservationSet& set, const std::filesystem::path& dir);

std::string frame_file_name(int frame, const char* prefix = "frame_", const char* ext = ".png");

}  // namespace tissuesim::app
