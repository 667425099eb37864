#pragma once

#include <span>
#include <vector>

#include "tissuesim/core/particle.hpp"

namespace tissuesim::estimate {

/// Spatially contiguous partition into exactly `cluster_count` non-empty
/// clusters. Positions are binned on a uniform grid sized to the bounding box;
/// surplus bins are merged smallest-first into the nearest cluster and missing
/// clusters come from median splits of the largest one. Labels are ordered by
/// each cluster's lowest particle index, so cluster_count == n yields the
/// identity labelling. Throws validation if cluster_count is not in [1, n].
std::vector<int> cluster_particles(std::span<const Particle> particles, int cluster_count);

/// Writes the partition into scene.material (cluster_id and cluster_count).
void assign_clusters(Scene& scene, int cluster_count);

}  // namespace tissuesim::estimate
