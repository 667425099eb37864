#pragma once

#include <filesystem>

#include "json.hpp"
#include "tissuesim/core/camera.hpp"

namespace tissuesim {

/// Keys: fx, fy, cx, cy, width, height, near, rotation (three rows),
/// translation. Missing keys keep the Camera defaults; unknown keys are
/// rejected.
Camera camera_from_json(const nlohmann::json& j);
nlohmann::json camera_to_json(const Camera& camera);
Camera load_camera(const std::filesystem::path& path);
void save_camera(const Camera& camera, const std::filesystem::path& path);

}  // namespace tissuesim
