#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tissuesim/core/camera_json.hpp"
#include "tissuesim/core/config.hpp"
#include "tissuesim/core/material.hpp"
#include "tissuesim/core/particle.hpp"
#include "tissuesim/core/trajectory.hpp"
#include "tissuesim/estimate/estimate.hpp"
#include "tissuesim/motion/drive.hpp"
#include "tissuesim/render/rasterizer.hpp"

namespace tissuesim::app {

/// One drive: a point path taken from a trajectory bundle (or given inline)
/// plus the radius of the region it grabs.
struct DriveSpec {
  std::filesystem::path trajectory;  // bundle CSV; empty when `points` is used
  std::size_t point_id = 0;
  std::vector<Vec3> points;          // inline keyframes, one per frame
  double radius = 0.0;               // 0: the simulation's default drive radius
  int start_frame = 0;               // bundle frame t becomes video frame start_frame + t
};

/// Parameters applied to every particle before estimation or overrides.
struct MaterialDefaults {
  double mu = 1.0e3;
  double eta = 1.0;
  double gamma = 1.0;
};

struct RunConfig {
  std::filesystem::path scene;  // optional; commands may take the scene as an argument
  SimConfig sim;
  long steps = 80000;
  double particle_volume = 0.0;  // 0: bounding-box volume / particle count
  MaterialDefaults material;
  Camera camera = default_camera();
  std::vector<DriveSpec> drives;
  estimate::EstimationConfig estimation;
  render::RenderOptions render;

  static Camera default_camera();
  void validate() const;
};

/// Unknown keys are rejected so typos surface as validation errors. Relative
/// paths resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Loads the trajectory a drive follows.
Trajectory load_drive_trajectory(const DriveSpec& spec, const SimConfig& sim);

/// Gives a loaded scene masses, volumes and the default material.
void prepare_for_simulation(Scene& scene, const RunConfig& config);

std::vector<motion::Drive> build_drives(const Scene& scene, const RunConfig& config);

}  // namespace tissuesim::app
