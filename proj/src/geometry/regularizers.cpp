#include "tissuesim/geometry/regularizers.hpp"

#include <algorithm>
#include <cmath>

#include "tissuesim/core/error.hpp"

namespace tissuesim::geometry {

namespace {

void check_frame(const TrajectoryBundle& b, std::size_t t) {
  if (t < 1 || t >= b.frames) throw Error(ErrorKind::domain, "trajectory loss needs 1 <= t < frames");
}

template <typename PairTerm>
double pair_sum(const TrajectoryBundle& b, std::size_t t, PairTerm term) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.neighbors.size(); ++i) {
    const auto& n = b.neighbors[i];
    for (std::size_t a = 0; a < n.size(); ++a) {
      const Vec3 da = b.displacement(t, n[a]);
      for (std::size_t c = a + 1; c < n.size(); ++c) total += term(da, b.displacement(t, n[c]));
    }
  }
  return total;
}

// Adds d/dX of lambda * traj_loss_relative(X, t) into grad.
void add_relative_gradient(const TrajectoryBundle& x, std::size_t t, double lambda, std::vector<Vec3>& grad) {
  const std::size_t N = x.points;
  for (std::size_t i = 0; i < x.neighbors.size(); ++i) {
    const auto& n = x.neighbors[i];
    for (std::size_t a = 0; a < n.size(); ++a) {
      for (std::size_t c = a + 1; c < n.size(); ++c) {
        const Vec3 g = 2.0 * lambda * (x.displacement(t, n[a]) - x.displacement(t, n[c]));
        grad[t * N + n[a]] += g;
        grad[(t - 1) * N + n[a]] -= g;
        grad[t * N + n[c]] -= g;
        grad[(t - 1) * N + n[c]] += g;
      }
    }
  }
}

}  // namespace

double traj_loss_paper(const TrajectoryBundle& b, std::size_t t) {
  check_frame(b, t);
  return pair_sum(b, t, [](const Vec3& p, const Vec3& q) { return p.dot(q); });
}

double traj_loss_relative(const TrajectoryBundle& b, std::size_t t) {
  check_frame(b, t);
  return pair_sum(b, t, [](const Vec3& p, const Vec3& q) { return (p - q).squaredNorm(); });
}

double aniso_loss(std::span<const Vec3> scales, double r_m, double r_ani) {
  double total = 0.0;
  for (const auto& s : scales) {
    if (!(s.minCoeff() > 0.0)) throw Error(ErrorKind::domain, "aniso_loss: scales must be positive");
    const double hi = s.maxCoeff();
    total += std::max(0.0, hi - r_m) + std::max(0.0, hi / s.minCoeff() - r_ani);
  }
  return total;
}

double refine_objective(const TrajectoryBundle& x, const TrajectoryBundle& y, const RefineOptions& opt) {
  double data = 0.0;
  for (std::size_t m = 0; m < x.xyz.size(); ++m) data += (x.xyz[m] - y.xyz[m]).squaredNorm();
  double reg = 0.0;
  if (opt.lambda_traj != 0.0) {
    for (std::size_t t = 1; t < x.frames; ++t) reg += traj_loss_relative(x, t);
  }
  return opt.lambda_data * data + opt.lambda_traj * reg;
}

RefineResult refine_trajectories(const TrajectoryBundle& observed, const RefineOptions& opt) {
  if (opt.lambda_data < 0.0 || opt.lambda_traj < 0.0) {
    throw Error(ErrorKind::validation, "refine: lambda weights must be non-negative");
  }
  if (opt.k < 2) throw Error(ErrorKind::validation, "refine: k must be >= 2");
  if (observed.xyz.size() != observed.frames * observed.points) {
    throw Error(ErrorKind::validation, "refine: bundle size does not match frames x points");
  }

  TrajectoryBundle y = observed;
  y.compute_neighbors(opt.k);
  RefineResult result;
  result.bundle = y;
  TrajectoryBundle& x = result.bundle;
  double f = refine_objective(x, y, opt);
  result.objective.push_back(f);

  double step = 0.5 / std::max(opt.lambda_data + 4.0 * opt.lambda_traj * static_cast<double>(opt.k), 1e-12);
  std::vector<Vec3> grad(x.xyz.size());
  for (int it = 0; it < opt.iterations; ++it) {
    for (std::size_t m = 0; m < grad.size(); ++m) grad[m] = 2.0 * opt.lambda_data * (x.xyz[m] - y.xyz[m]);
    if (opt.lambda_traj != 0.0) {
      for (std::size_t t = 1; t < x.frames; ++t) add_relative_gradient(x, t, opt.lambda_traj, grad);
    }
    double g2 = 0.0;
    for (const auto& g : grad) g2 += g.squaredNorm();
    if (g2 == 0.0 || g2 <= 1e-24 * std::max(f, 1e-300)) break;

    TrajectoryBundle trial = x;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t m = 0; m < grad.size(); ++m) trial.xyz[m] = x.xyz[m] - step * grad[m];
      const double ft = refine_objective(trial, y, opt);
      if (ft <= f - 1e-4 * step * g2) {
        x.xyz.swap(trial.xyz);
        f = ft;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // At rounding level the objective cannot decrease further; that is
      // convergence, not divergence.
      if (g2 * step <= 1e-14 * std::max(f, 1e-300)) break;
      throw Error(ErrorKind::unstable_step, "refine: objective did not decrease after backtracking");
    }
    result.objective.push_back(f);
    result.iterations = it + 1;
    step *= 2.0;
  }
  return result;
}

}  // namespace tissuesim::geometry
