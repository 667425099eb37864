#include "tissuesim/estimate/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include <Eigen/Dense>

#include "tissuesim/core/error.hpp"
#include "tissuesim/mpm/simulator.hpp"
#include "tissuesim/render/loss.hpp"
#include "tissuesim/scene/knn.hpp"

namespace tissuesim::estimate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kParamsPerCluster = 3;

struct BudgetExhausted {};

std::vector<ClusterParams> from_log(const Eigen::VectorXd& theta) {
  std::vector<ClusterParams> p(theta.size() / kParamsPerCluster);
  for (std::size_t c = 0; c < p.size(); ++c) {
    p[c].mu = std::exp(theta[kParamsPerCluster * c]);
    p[c].eta = std::exp(theta[kParamsPerCluster * c + 1]);
    p[c].gamma = std::exp(theta[kParamsPerCluster * c + 2]);
  }
  return p;
}

Eigen::VectorXd to_log(const std::vector<ClusterParams>& p) {
  Eigen::VectorXd theta(kParamsPerCluster * p.size());
  for (std::size_t c = 0; c < p.size(); ++c) {
    theta[kParamsPerCluster * c] = std::log(p[c].mu);
    theta[kParamsPerCluster * c + 1] = std::log(p[c].eta);
    theta[kParamsPerCluster * c + 2] = std::log(p[c].gamma);
  }
  return theta;
}

void check_bounds(const ParamBounds& b, const char* name) {
  if (!(b.lo > 0.0) || !(b.lo < b.hi)) {
    throw Error(ErrorKind::validation, std::string("estimation bounds for ") + name + " need 0 < lo < hi");
  }
}

// Runs the loss on several parameter sets, concurrently when threads > 1.
// Results land by candidate index, so the thread count never changes them.
class Evaluator {
 public:
  Evaluator(const Problem& problem, const EstimationConfig& cfg, const TvPairs& pairs)
      : problem_(problem), cfg_(cfg), pairs_(pairs) {}

  void set_window(std::vector<int> frames) { frames_ = std::move(frames); }
  long simulations() const { return simulations_; }

  std::vector<double> operator()(const std::vector<Eigen::VectorXd>& thetas) {
    if (cfg_.max_simulations > 0 && simulations_ + static_cast<long>(thetas.size()) > cfg_.max_simulations) {
      throw BudgetExhausted{};
    }
    simulations_ += static_cast<long>(thetas.size());
    std::vector<double> out(thetas.size());
    auto one = [&](std::size_t i) {
      const LossBreakdown l = window_loss(problem_, from_log(thetas[i]), frames_, pairs_, cfg_.lambda_tv);
      out[i] = l.failed ? kInf : l.total;
    };
    const int threads = std::min<int>(cfg_.threads, static_cast<int>(thetas.size()));
    if (threads <= 1) {
      for (std::size_t i = 0; i < thetas.size(); ++i) one(i);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < thetas.size(); i += threads) one(i);
        });
      }
      for (auto& th : pool) th.join();
    }
    return out;
  }

  double operator()(const Eigen::VectorXd& theta) { return (*this)(std::vector<Eigen::VectorXd>{theta})[0]; }

 private:
  const Problem& problem_;
  const EstimationConfig& cfg_;
  const TvPairs& pairs_;
  std::vector<int> frames_;
  long simulations_ = 0;
};

// Minimizer of sum_c n_c (x_c - x0_c)^2 + lambda sum_{a,b} w_ab (x_a - x_b)^2,
// applied to each parameter's log values.
Eigen::VectorXd tv_projection(const Eigen::VectorXd& theta, const TvPairs& pairs, const std::vector<double>& share,
                              double lambda) {
  const int C = static_cast<int>(share.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(C, C);
  for (int a = 0; a < C; ++a) A(a, a) = share[a];
  for (int a = 0; a < C; ++a) {
    for (int b = 0; b < C; ++b) {
      if (a == b) continue;
      const double w = lambda * (pairs.weight[a][b] + pairs.weight[b][a]);
      A(a, a) += w;
      A(a, b) -= w;
    }
  }
  const auto solver = A.ldlt();
  Eigen::VectorXd out = theta;
  for (int k = 0; k < kParamsPerCluster; ++k) {
    Eigen::VectorXd rhs(C);
    for (int c = 0; c < C; ++c) rhs[c] = share[c] * theta[kParamsPerCluster * c + k];
    const Eigen::VectorXd x = solver.solve(rhs);
    for (int c = 0; c < C; ++c) out[kParamsPerCluster * c + k] = x[c];
  }
  return out;
}

}  // namespace

void EstimationConfig::validate() const {
  if (window < 1) throw Error(ErrorKind::validation, "estimation window k must be >= 1");
  if (rounds < 0 || iterations < 0) throw Error(ErrorKind::validation, "rounds and iterations must be >= 0");
  check_bounds(mu, "mu");
  check_bounds(eta, "eta");
  check_bounds(gamma, "gamma");
  if (!(fd_step > 0.0 && fd_step < 0.5)) throw Error(ErrorKind::validation, "fd_step must be in (0, 0.5)");
  if (!(max_log_step > 0.0)) throw Error(ErrorKind::validation, "max_log_step must be positive");
  if (lambda_tv < 0.0) throw Error(ErrorKind::validation, "lambda_tv must be >= 0");
  if (cluster_count < 1) throw Error(ErrorKind::validation, "cluster_count must be >= 1");
  if (initial && static_cast<int>(initial->size()) != cluster_count) {
    throw Error(ErrorKind::validation, "initial parameters must have one entry per cluster");
  }
}

MaterialField expand_params(const MaterialField& base, const std::vector<ClusterParams>& params, double nu) {
  std::vector<MaterialParams> per_cluster;
  for (const auto& p : params) per_cluster.push_back({p.mu, lambda_from_shear(p.mu, nu), p.eta, p.gamma});
  MaterialField m = base;
  m.apply_cluster_params(per_cluster);
  return m;
}

SimRenderResult simulate_and_render(const Problem& problem, const std::vector<ClusterParams>& params,
                                    const std::vector<int>& frames) {
  SimRenderResult out;
  if (frames.empty()) return out;
  Scene scene = problem.scene;
  scene.material = expand_params(scene.material, params, problem.sim.poisson_nu);

  std::vector<std::size_t> order(frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frames[a] < frames[b]; });

  out.frames.resize(frames.size());
  try {
    mpm::Simulator sim(std::move(scene), problem.sim);
    for (const auto& d : problem.drives) sim.add_drive(d);
    const long stride = problem.sim.frame_stride();
    for (std::size_t i : order) {
      if (frames[i] < 0) throw Error(ErrorKind::validation, "negative frame index");
      const long target = frames[i] * stride;
      while (sim.steps_taken() < target) sim.step();
      out.frames[i] = render::render(sim.scene().particles, problem.observations.camera, problem.render_options).rgb;
    }
  } catch (const Error& e) {
    out.frames.clear();
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

TvPairs tv_pairs(const Scene& scene, std::size_t k) {
  const int C = scene.material.cluster_count;
  TvPairs out;
  out.weight.assign(C, std::vector<double>(C, 0.0));
  const std::size_t n = scene.size();
  if (n < 2 || k == 0) return out;
  std::vector<Vec3> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[i] = scene.particles[i].position;
  const auto sets = scene::knn(pos, std::min(k, n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : sets[i]) {
      out.weight[scene.material.cluster_id[i]][scene.material.cluster_id[j]] += 1.0;
      ++out.pair_count;
    }
  }
  for (auto& row : out.weight) {
    for (auto& w : row) w /= static_cast<double>(out.pair_count);
  }
  return out;
}

TvLoss tv_loss(const TvPairs& pairs, const std::vector<ClusterParams>& p) {
  TvLoss l;
  for (std::size_t a = 0; a < pairs.weight.size(); ++a) {
    for (std::size_t b = 0; b < pairs.weight.size(); ++b) {
      const double w = pairs.weight[a][b];
      if (w == 0.0) continue;
      l.mu += w * (p[a].mu - p[b].mu) * (p[a].mu - p[b].mu);
      l.eta += w * (p[a].eta - p[b].eta) * (p[a].eta - p[b].eta);
      l.gamma += w * (p[a].gamma - p[b].gamma) * (p[a].gamma - p[b].gamma);
    }
  }
  return l;
}

LossBreakdown window_loss(const Problem& problem, const std::vector<ClusterParams>& params,
                          const std::vector<int>& frames, const TvPairs& pairs, double lambda_tv) {
  LossBreakdown out;
  for (int f : frames) {
    if (!problem.observations.find(f)) throw Error(ErrorKind::validation, "no observation for frame " + std::to_string(f));
  }
  const SimRenderResult sim = simulate_and_render(problem, params, frames);
  if (sim.failed) {
    out.failed = true;
    out.total = kInf;
    return out;
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ObservedFrame* obs = problem.observations.find(frames[i]);
    out.photometric += render::masked_l1(obs->image, sim.frames[i], obs->mask).value;
  }
  if (lambda_tv > 0.0) out.tv = lambda_tv * tv_loss(pairs, params).sum();
  out.total = out.photometric + out.tv;
  return out;
}

EstimationResult estimate(const Problem& problem, const EstimationConfig& cfg) {
  cfg.validate();
  const int C = problem.scene.material.cluster_count;
  if (C != cfg.cluster_count) {
    throw Error(ErrorKind::validation, "scene cluster count does not match the estimation config");
  }
  if (problem.observations.frames.empty()) throw Error(ErrorKind::validation, "no observed frames");
  std::vector<int> observed;
  for (const auto& f : problem.observations.frames) observed.push_back(f.frame_index);
  std::sort(observed.begin(), observed.end());
  const int last_observed = observed.back();

  const int rounds = cfg.rounds > 0 ? cfg.rounds : std::max(1, (last_observed + cfg.window - 1) / cfg.window);

  std::vector<ClusterParams> init(C);
  for (auto& p : init) {
    p.mu = std::sqrt(cfg.mu.lo * cfg.mu.hi);
    p.eta = std::sqrt(cfg.eta.lo * cfg.eta.hi);
    p.gamma = std::sqrt(cfg.gamma.lo * cfg.gamma.hi);
  }
  if (cfg.initial) init = *cfg.initial;

  Eigen::VectorXd lo(kParamsPerCluster * C), hi(kParamsPerCluster * C);
  for (int c = 0; c < C; ++c) {
    lo.segment<3>(kParamsPerCluster * c) << std::log(cfg.mu.lo), std::log(cfg.eta.lo), std::log(cfg.gamma.lo);
    hi.segment<3>(kParamsPerCluster * c) << std::log(cfg.mu.hi), std::log(cfg.eta.hi), std::log(cfg.gamma.hi);
  }
  Eigen::VectorXd theta = to_log(init).cwiseMax(lo).cwiseMin(hi);

  const TvPairs pairs = tv_pairs(problem.scene, cfg.tv_neighbors);
  std::vector<double> share(C, 0.0);
  for (int id : problem.scene.material.cluster_id) share[id] += 1.0 / static_cast<double>(problem.scene.size());

  Evaluator eval(problem, cfg, pairs);
  EstimationResult result;
  double best = kInf;
  const double h = std::log1p(cfg.fd_step);

  try {
    for (int r = 1; r <= rounds; ++r) {
      RoundTrace trace;
      trace.last_frame = r == rounds && cfg.rounds == 0 ? last_observed : std::min(r * cfg.window, last_observed);
      std::vector<int> window;
      for (int f : observed) {
        if (f <= trace.last_frame) window.push_back(f);
      }
      eval.set_window(window);
      best = eval(theta);
      trace.losses.push_back(best);
      result.rounds.push_back(trace);  // kept current below so a budget stop keeps partial traces

      for (int it = 0; it < cfg.iterations; ++it) {
        for (int j = 0; j < theta.size(); ++j) {
          Eigen::VectorXd plus = theta, minus = theta;
          plus[j] = std::min(theta[j] + h, hi[j]);
          minus[j] = std::max(theta[j] - h, lo[j]);
          const double hp = plus[j] - theta[j], hm = theta[j] - minus[j];
          if (hp <= 0.0 && hm <= 0.0) continue;
          const std::vector<double> probes = eval(std::vector<Eigen::VectorXd>{plus, minus});
          const double fp = hp > 0.0 ? probes[0] : best;
          const double fm = hm > 0.0 ? probes[1] : best;

          Eigen::VectorXd cand = theta;
          double fcand = best;
          if (fp < fcand) {
            cand = plus;
            fcand = fp;
          }
          if (fm < fcand) {
            cand = minus;
            fcand = fm;
          }

          // Quadratic model through the three samples (non-uniform spacing).
          double delta = 0.0;
          if (hp > 0.0 && hm > 0.0 && std::isfinite(fp) && std::isfinite(fm)) {
            const double dp = (fp - best) / hp, dm = (best - fm) / hm;
            const double g = (dp * hm + dm * hp) / (hp + hm);
            const double curv = 2.0 * (dp - dm) / (hp + hm);
            if (curv > 0.0) {
              delta = -g / curv;
            } else if (g != 0.0) {
              delta = g > 0.0 ? -cfg.max_log_step : cfg.max_log_step;
            }
            delta = std::clamp(delta, -cfg.max_log_step, cfg.max_log_step);
          }
          for (int bt = 0; bt <= cfg.max_backtracks && delta != 0.0; ++bt, delta *= 0.5) {
            Eigen::VectorXd trial = theta;
            trial[j] = std::clamp(theta[j] + delta, lo[j], hi[j]);
            if (trial[j] == theta[j] || trial[j] == plus[j] || trial[j] == minus[j]) continue;
            const double ft = eval(trial);
            if (ft < fcand) {
              cand = trial;
              fcand = ft;
            }
            if (ft < best) break;
          }
          if (fcand < best) {
            theta = cand;
            best = fcand;
            result.rounds.back().losses.push_back(best);
          }
        }
      }

      if (cfg.lambda_tv > 0.0 && C > 1) {
        const Eigen::VectorXd smooth = tv_projection(theta, pairs, share, cfg.lambda_tv).cwiseMax(lo).cwiseMin(hi);
        const double fs = eval(smooth);
        if (fs <= best) {
          theta = smooth;
          best = fs;
          result.rounds.back().smoothed = true;
          result.rounds.back().losses.push_back(best);
        }
      }
    }
  } catch (const BudgetExhausted&) {
    result.budget_exhausted = true;
  }

  result.params = from_log(theta);
  result.material = expand_params(problem.scene.material, result.params, problem.sim.poisson_nu);
  result.best_loss = best;
  result.simulations = eval.simulations();
  return result;
}

void save_material_table(const std::vector<ClusterParams>& params, double nu, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.precision(17);
  out << "cluster_id,mu,lambda,eta,gamma\n";
  for (std::size_t c = 0; c < params.size(); ++c) {
    out << c << ',' << params[c].mu << ',' << lambda_from_shear(params[c].mu, nu) << ',' << params[c].eta << ','
        << params[c].gamma << '\n';
  }
}

std::vector<ClusterParams> load_material_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "file not found: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("cluster_id,mu,lambda,eta,gamma", 0) != 0) {
    throw Error(ErrorKind::parse, path.string() + ": bad material table header");
  }
  std::map<int, ClusterParams> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int id = 0;
    double mu = 0, lambda = 0, eta = 0, gamma = 0;
    if (!(ls >> id >> mu >> lambda >> eta >> gamma)) {
      throw Error(ErrorKind::parse, path.string() + " line " + std::to_string(line_no) + ": expected 5 fields");
    }
    rows[id] = {mu, eta, gamma};
  }
  std::vector<ClusterParams> out;
  for (const auto& [id, p] : rows) {
    if (id != static_cast<int>(out.size())) throw Error(ErrorKind::parse, path.string() + ": cluster ids not 0..C-1");
    out.push_back(p);
  }
  return out;
}

void save_cluster_map(const MaterialField& material, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "particle_id,cluster_id\n";
  for (std::size_t i = 0; i < material.cluster_id.size(); ++i) out << i << ',' << material.cluster_id[i] << '\n';
}

}  // namespace tissuesim::estimate
