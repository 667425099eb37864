#pragma once

#include <span>
#include <vector>

#include "tissuesim/geometry/bundle.hpp"

namespace tissuesim::geometry {

/// Literal dot-product form: sum over i, over unordered pairs j < k in N_i, of
/// dmu_j^t . dmu_k^t.
double traj_loss_paper(const TrajectoryBundle& bundle, std::size_t t);

/// Same pairs with |dmu_j^t - dmu_k^t|^2; zero iff displacements agree inside
/// every neighbor set.
double traj_loss_relative(const TrajectoryBundle& bundle, std::size_t t);

/// sum_i ReLU(max S_i - r_m) + ReLU(max S_i / min S_i - r_ani).
double aniso_loss(std::span<const Vec3> scales, double r_m = 1.0, double r_ani = 3.0);

struct RefineOptions {
  std::size_t k = 8;
  int iterations = 200;
  double lambda_data = 1.0;
  double lambda_traj = 1.0;
  int max_backtracks = 60;
};

struct RefineResult {
  TrajectoryBundle bundle;
  std::vector<double> objective;  // one entry per accepted step, starting with the input
  int iterations = 0;
};

/// Gradient descent with Armijo backtracking on
///   lambda_data |X - Y|^2 + lambda_traj sum_{t>=1} traj_loss_relative(X, t)
/// with neighbor sets from Y's frame 0. Throws unstable_step when no step
/// length decreases the objective at a non-stationary point.
RefineResult refine_trajectories(const TrajectoryBundle& observed, const RefineOptions& options = {});

/// Objective used by refine_trajectories, exposed for tests and reporting.
double refine_objective(const TrajectoryBundle& x, const TrajectoryBundle& observed, const RefineOptions& options);

}  // namespace tissuesim::geometry
