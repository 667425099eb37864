#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tissuesim/core/particle.hpp"

namespace tissuesim::scene {

// Binary scene container:
//   8 bytes  magic "TSSPLAT\0"
//   uint32   version (1)
//   uint32   particle count
//   count x 14 float32: position xyz, rotation wxyz, scale xyz, opacity, color rgb
// All values little-endian.
inline constexpr char kSceneMagic[8] = {'T', 'S', 'S', 'P', 'L', 'A', 'T', '\0'};
inline constexpr std::uint32_t kSceneVersion = 1;

/// Loads a scene container or, when the file starts with "ply", a point-cloud
/// polygon file. Simulation state is reset to rest: v = 0, F = I, C = 0,
/// mass = volume0 = 1, uniform default material.
Scene load_scene(const std::filesystem::path& path);
Scene read_scene(std::istream& in);
Scene read_ply(std::istream& in);

void save_scene(const Scene& scene, const std::filesystem::path& path);
void write_scene(const Scene& scene, std::ostream& out);

}  // namespace tissuesim::scene
