#include "tissuesim/core/material.hpp"

#include <cmath>
#include <string>

#include "tissuesim/core/error.hpp"

namespace tissuesim {

LameParameters lame_from_young_poisson(double youngs, double nu) {
  if (!(youngs > 0.0) || !std::isfinite(youngs)) {
    throw Error(ErrorKind::domain, "Young's modulus must be positive, got " + std::to_string(youngs));
  }
  // nu = 0 is accepted (lambda = 0); nu -> 0.5 is the incompressible singularity.
  if (!(nu >= 0.0) || !(nu < 0.5)) {
    throw Error(ErrorKind::domain, "Poisson ratio must lie in [0, 0.5), got " + std::to_string(nu));
  }
  return {youngs / (2.0 * (1.0 + nu)), youngs * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))};
}

double young_from_lame(double mu, double lambda) {
  return mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
}

double lambda_from_shear(double mu, double nu) {
  if (!(nu >= 0.0) || !(nu < 0.5)) {
    throw Error(ErrorKind::domain, "Poisson ratio must lie in [0, 0.5), got " + std::to_string(nu));
  }
  return 2.0 * mu * nu / (1.0 - 2.0 * nu);
}

MaterialField MaterialField::uniform(std::size_t n, const MaterialParams& params) {
  MaterialField m;
  m.mu.assign(n, params.mu);
  m.lambda.assign(n, params.lambda);
  m.eta.assign(n, params.eta);
  m.gamma.assign(n, params.gamma);
  m.cluster_id.assign(n, 0);
  m.cluster_count = 1;
  return m;
}

void MaterialField::set(std::size_t i, const MaterialParams& p) {
  mu[i] = p.mu;
  lambda[i] = p.lambda;
  eta[i] = p.eta;
  gamma[i] = p.gamma;
}

void MaterialField::push_back(const MaterialParams& p, int cluster) {
  mu.push_back(p.mu);
  lambda.push_back(p.lambda);
  eta.push_back(p.eta);
  gamma.push_back(p.gamma);
  cluster_id.push_back(cluster);
}

void MaterialField::apply_cluster_params(const std::vector<MaterialParams>& per_cluster) {
  if (static_cast<int>(per_cluster.size()) != cluster_count) {
    throw Error(ErrorKind::validation, "expected " + std::to_string(cluster_count) +
                                           " cluster parameter sets, got " +
                                           std::to_string(per_cluster.size()));
  }
  for (std::size_t i = 0; i < size(); ++i) set(i, per_cluster[cluster_id[i]]);
}

}  // namespace tissuesim
