#pragma once

#include <cstddef>
#include <vector>

namespace tissuesim {

/// Lamé pair derived from Young's modulus and Poisson's ratio.
struct LameParameters {
  double mu = 0.0;
  double lambda = 0.0;
};

/// mu = E / (2(1+nu)), lambda = E nu / ((1+nu)(1-2nu)).
/// Throws ErrorKind::domain unless E > 0 and 0 <= nu < 0.5.
LameParameters lame_from_young_poisson(double youngs, double nu);

/// Inverse of the above: E = mu (3 lambda + 2 mu) / (lambda + mu).
double young_from_lame(double mu, double lambda);

/// lambda for a given shear modulus at fixed nu (lambda = 2 mu nu / (1 - 2 nu)).
double lambda_from_shear(double mu, double nu);

struct MaterialParams {
  double mu = 1.0;
  double lambda = 1.0;
  double eta = 0.0;
  double gamma = 0.0;
  bool operator==(const MaterialParams&) const = default;
};

/// Per-particle visco-elastic parameters plus the cluster partition used by
/// inverse estimation. All arrays share the particle count.
struct MaterialField {
  std::vector<double> mu;
  std::vector<double> lambda;
  std::vector<double> eta;
  std::vector<double> gamma;
  std::vector<int> cluster_id;
  int cluster_count = 1;

  static MaterialField uniform(std::size_t n, const MaterialParams& params);

  std::size_t size() const { return mu.size(); }
  MaterialParams at(std::size_t i) const { return {mu[i], lambda[i], eta[i], gamma[i]}; }
  void set(std::size_t i, const MaterialParams& p);
  void push_back(const MaterialParams& p, int cluster = 0);

  /// Writes one parameter set per cluster into every member particle.
  void apply_cluster_params(const std::vector<MaterialParams>& per_cluster);

  bool operator==(const MaterialField&) const = default;
};

}  // namespace tissuesim
