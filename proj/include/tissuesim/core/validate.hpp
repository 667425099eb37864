#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tissuesim/core/config.hpp"
#include "tissuesim/core/particle.hpp"

namespace tissuesim {

struct Violation {
  std::optional<std::size_t> particle;
  std::string message;
};

/// Lists every invariant violation in the scene. An empty report means the
/// scene can be handed to the simulator.
std::vector<Violation> validate_scene(const Scene& scene, const SimConfig& config);

}  // namespace tissuesim
