#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tissuesim/core/config.hpp"
#include "tissuesim/core/material.hpp"
#include "tissuesim/core/observation.hpp"
#include "tissuesim/core/particle.hpp"
#include "tissuesim/motion/drive.hpp"
#include "tissuesim/render/rasterizer.hpp"

namespace tissuesim::estimate {

struct ParamBounds {
  double lo = 1.0;
  double hi = 1.0;
};

/// Estimated quantities per cluster. lambda follows from mu and the fixed
/// Poisson ratio.
struct ClusterParams {
  double mu = 1.0;
  double eta = 0.0;
  double gamma = 0.0;
  bool operator==(const ClusterParams&) const = default;
};

struct EstimationConfig {
  int window = 25;                   // k, frames added per round
  int rounds = 0;                    // 0: enough rounds to cover every observed frame
  int iterations = 3;                // coordinate sweeps per round
  ParamBounds mu{1e2, 1e6};
  ParamBounds eta{1e-2, 1e3};
  ParamBounds gamma{1e-3, 1e2};
  double fd_step = 0.05;             // relative step; probes at p * (1 +- fd_step) in log space
  double max_log_step = 1.0;         // cap on one coordinate move, in natural-log units
  int max_backtracks = 4;
  double lambda_tv = 0.0;
  std::size_t tv_neighbors = 8;
  int cluster_count = 2;
  std::optional<std::vector<ClusterParams>> initial;  // default: geometric mean of the bounds
  long max_simulations = 0;          // 0: unlimited
  int threads = 1;

  /// Throws validation on k < 1, lo >= hi, non-positive bounds or fd_step
  /// outside (0, 0.5).
  void validate() const;
};

/// Everything a loss evaluation needs besides the parameters.
struct Problem {
  Scene scene;                      // cluster ids already assigned
  SimConfig sim;
  std::vector<motion::Drive> drives;
  ObservationSet observations;
  render::RenderOptions render_options;
};

struct SimRenderResult {
  std::vector<Image> frames;  // one per requested frame index, in request order
  bool failed = false;        // the simulation raised; frames is empty
  std::string error;
};

/// Loads per-cluster parameters into the material field, simulates up to the
/// last requested frame and renders each requested frame.
SimRenderResult simulate_and_render(const Problem& problem, const std::vector<ClusterParams>& params,
                                    const std::vector<int>& frames);

/// Per-particle field with each cluster's parameters written in.
MaterialField expand_params(const MaterialField& base, const std::vector<ClusterParams>& params, double poisson_nu);

/// Neighbor pairs (i, j in N_i) weighted by cluster: w[a][b] is the fraction of
/// all pairs joining cluster a to cluster b.
struct TvPairs {
  std::vector<std::vector<double>> weight;
  std::size_t pair_count = 0;
};
TvPairs tv_pairs(const Scene& scene, std::size_t k);

/// Mean squared parameter difference over neighbor pairs, per parameter.
struct TvLoss {
  double mu = 0.0, eta = 0.0, gamma = 0.0;
  double sum() const { return mu + eta + gamma; }
};
TvLoss tv_loss(const TvPairs& pairs, const std::vector<ClusterParams>& params);

struct LossBreakdown {
  double total = 0.0;
  double photometric = 0.0;  // sum of per-frame masked L1
  double tv = 0.0;           // lambda_tv * sum of TvLoss
  bool failed = false;       // total is +inf
};

LossBreakdown window_loss(const Problem& problem, const std::vector<ClusterParams>& params,
                          const std::vector<int>& frames, const TvPairs& pairs, double lambda_tv);

struct RoundTrace {
  int last_frame = 0;               // window is every observed frame <= last_frame
  std::vector<double> losses;       // best loss after each accepted move, starting value first
  bool smoothed = false;            // the post-round projection was accepted
};

struct EstimationResult {
  std::vector<ClusterParams> params;
  MaterialField material;
  std::vector<RoundTrace> rounds;
  double best_loss = 0.0;           // final round's window loss at params
  long simulations = 0;
  bool budget_exhausted = false;
};

/// Rolling estimation: round r fits every observed frame up to r * k using
/// coordinate descent with central finite differences on log parameters, then
/// applies the L_tv-weighted projection of cluster parameters.
EstimationResult estimate(const Problem& problem, const EstimationConfig& config);

// Material table: header "cluster_id,mu,lambda,eta,gamma"; cluster map:
// header "particle_id,cluster_id".
void save_material_table(const std::vector<ClusterParams>& params, double poisson_nu,
                         const std::filesystem::path& path);
std::vector<ClusterParams> load_material_table(const std::filesystem::path& path);
void save_cluster_map(const MaterialField& material, const std::filesystem::path& path);

}  // namespace tissuesim::estimate
