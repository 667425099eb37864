#include "tissuesim/app/run_config.hpp"

#include <fstream>
#include <set>

#include "tissuesim/core/camera_json.hpp"
#include "tissuesim/core/error.hpp"
#include "tissuesim/core/json_util.hpp"
#include "tissuesim/geometry/bundle.hpp"
#include "tissuesim/scene/normalize.hpp"

namespace tissuesim::app {

using nlohmann::json;

namespace {

constexpr const char* kFaceNames[6] = {"neg_x", "pos_x", "neg_y", "pos_y", "neg_z", "pos_z"};

using json_util::fail;
using json_util::Section;
using json_util::vec3_from;
using json_util::vec3_json;

estimate::ParamBounds bounds_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) fail(where, "expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.empty() || p.is_absolute() || base.empty() ? p : base / p;
}

void parse_sim(const json& j, SimConfig& sim) {
  Section s(j, "simulation");
  s.get("grid_resolution", sim.grid_resolution);
  s.get("domain_min", sim.domain_min);
  s.get("domain_size", sim.domain_size);
  s.get("dt", sim.dt);
  s.get("frame_dt", sim.frame_dt);
  s.get("spline_degree", sim.spline_degree);
  s.get("boundary_cells", sim.boundary_cells);
  s.get("drive_radius_cells", sim.drive_radius_cells);
  s.get("poisson_nu", sim.poisson_nu);
  s.get("density", sim.density);
  s.get("deterministic", sim.deterministic);
  if (const json* b = s.child("boundary")) {
    Section faces(*b, s.path("boundary"));
    for (int f = 0; f < 6; ++f) {
      std::string kind = to_string(sim.boundary[f]);
      faces.get(kFaceNames[f], kind);
      try {
        sim.boundary[f] = parse_boundary_kind(kind);
      } catch (const Error& e) {
        fail(s.path("boundary") + "." + kFaceNames[f], e.what());
      }
    }
  }
}

void parse_estimation(const json& j, estimate::EstimationConfig& e) {
  Section s(j, "estimation");
  s.get("window", e.window);
  s.get("rounds", e.rounds);
  s.get("iterations", e.iterations);
  s.get("fd_step", e.fd_step);
  s.get("max_log_step", e.max_log_step);
  s.get("max_backtracks", e.max_backtracks);
  s.get("lambda_tv", e.lambda_tv);
  s.get("tv_neighbors", e.tv_neighbors);
  s.get("cluster_count", e.cluster_count);
  s.get("max_simulations", e.max_simulations);
  if (const json* b = s.child("mu")) e.mu = bounds_from(*b, s.path("mu"));
  if (const json* b = s.child("eta")) e.eta = bounds_from(*b, s.path("eta"));
  if (const json* b = s.child("gamma")) e.gamma = bounds_from(*b, s.path("gamma"));
  if (const json* init = s.child("initial")) {
    if (!init->is_array()) fail(s.path("initial"), "expected a list of {mu, eta, gamma}");
    std::vector<estimate::ClusterParams> params;
    for (std::size_t c = 0; c < init->size(); ++c) {
      estimate::ClusterParams p;
      Section row((*init)[c], s.path("initial") + "[" + std::to_string(c) + "]");
      row.get("mu", p.mu);
      row.get("eta", p.eta);
      row.get("gamma", p.gamma);
      params.push_back(p);
    }
    e.initial = params;
  }
}

DriveSpec parse_drive(const json& j, const std::string& where, const std::filesystem::path& base) {
  DriveSpec d;
  Section s(j, where);
  std::string path;
  s.get("trajectory", path);
  d.trajectory = resolve(path, base);
  s.get("point_id", d.point_id);
  s.get("radius", d.radius);
  s.get("start_frame", d.start_frame);
  if (const json* pts = s.child("points")) {
    if (!pts->is_array()) fail(s.path("points"), "expected a list of [x, y, z]");
    for (std::size_t i = 0; i < pts->size(); ++i) {
      d.points.push_back(vec3_from((*pts)[i], s.path("points") + "[" + std::to_string(i) + "]"));
    }
  }
  if (d.trajectory.empty() == d.points.empty()) fail(where, "give exactly one of 'trajectory' or 'points'");
  return d;
}

}  // namespace

Camera RunConfig::default_camera() {
  // Above the domain looking down -z; image x = world x, image down = world -y.
  Camera c;
  c.width = c.height = 256;
  c.fx = c.fy = 320.0;
  c.cx = c.cy = 128.0;
  c.rotation = Vec3(1.0, -1.0, -1.0).asDiagonal();
  c.translation = Vec3(0.0, 0.0, 3.0);
  return c;
}

void RunConfig::validate() const {
  sim.validate();
  camera.validate();
  estimation.validate();
  if (steps < 0) throw Error(ErrorKind::validation, "steps must be >= 0");
  if (particle_volume < 0.0) throw Error(ErrorKind::validation, "particle_volume must be >= 0");
  if (!(material.mu > 0.0) || material.eta < 0.0 || material.gamma < 0.0) {
    throw Error(ErrorKind::validation, "material needs mu > 0, eta >= 0, gamma >= 0");
  }
  for (const auto& d : drives) {
    if (d.radius < 0.0) throw Error(ErrorKind::validation, "drive radius must be >= 0");
    if (d.start_frame < 0) throw Error(ErrorKind::validation, "drive start_frame must be >= 0");
  }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  {
    Section s(j, "run config");
    std::string scene;
    s.get("scene", scene);
    c.scene = resolve(scene, base_dir);
    s.get("steps", c.steps);
    s.get("particle_volume", c.particle_volume);
    if (const json* sim = s.child("simulation")) parse_sim(*sim, c.sim);
    if (const json* m = s.child("material")) {
      Section ms(*m, "material");
      ms.get("mu", c.material.mu);
      ms.get("eta", c.material.eta);
      ms.get("gamma", c.material.gamma);
    }
    if (const json* cam = s.child("camera")) c.camera = camera_from_json(*cam);
    if (const json* d = s.child("drives")) {
      if (!d->is_array()) fail("run config drives", "expected a list");
      for (std::size_t i = 0; i < d->size(); ++i) {
        c.drives.push_back(parse_drive((*d)[i], "drives[" + std::to_string(i) + "]", base_dir));
      }
    }
    if (const json* e = s.child("estimation")) parse_estimation(*e, c.estimation);
    if (const json* r = s.child("render")) {
      Section rs(*r, "render");
      rs.get("tiled", c.render.tiled);
    }
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(json_util::read_file(path), path.parent_path());
}

json to_json(const RunConfig& c) {
  json boundary;
  for (int f = 0; f < 6; ++f) boundary[kFaceNames[f]] = to_string(c.sim.boundary[f]);
  json drives = json::array();
  for (const auto& d : c.drives) {
    json jd{{"point_id", d.point_id}, {"radius", d.radius}, {"start_frame", d.start_frame}};
    if (!d.trajectory.empty()) jd["trajectory"] = d.trajectory.string();
    if (!d.points.empty()) {
      jd["points"] = json::array();
      for (const auto& p : d.points) jd["points"].push_back(vec3_json(p));
    }
    drives.push_back(jd);
  }
  const auto& e = c.estimation;
  json est{{"window", e.window},
           {"rounds", e.rounds},
           {"iterations", e.iterations},
           {"mu", {e.mu.lo, e.mu.hi}},
           {"eta", {e.eta.lo, e.eta.hi}},
           {"gamma", {e.gamma.lo, e.gamma.hi}},
           {"fd_step", e.fd_step},
           {"max_log_step", e.max_log_step},
           {"max_backtracks", e.max_backtracks},
           {"lambda_tv", e.lambda_tv},
           {"tv_neighbors", e.tv_neighbors},
           {"cluster_count", e.cluster_count},
           {"max_simulations", e.max_simulations}};
  if (e.initial) {
    est["initial"] = json::array();
    for (const auto& p : *e.initial) est["initial"].push_back({{"mu", p.mu}, {"eta", p.eta}, {"gamma", p.gamma}});
  }
  json j{{"steps", c.steps},
         {"particle_volume", c.particle_volume},
         {"simulation",
          {{"grid_resolution", c.sim.grid_resolution},
           {"domain_min", c.sim.domain_min},
           {"domain_size", c.sim.domain_size},
           {"dt", c.sim.dt},
           {"frame_dt", c.sim.frame_dt},
           {"spline_degree", c.sim.spline_degree},
           {"boundary", boundary},
           {"boundary_cells", c.sim.boundary_cells},
           {"drive_radius_cells", c.sim.drive_radius_cells},
           {"poisson_nu", c.sim.poisson_nu},
           {"density", c.sim.density},
           {"deterministic", c.sim.deterministic}}},
         {"material", {{"mu", c.material.mu}, {"eta", c.material.eta}, {"gamma", c.material.gamma}}},
         {"camera", camera_to_json(c.camera)},
         {"drives", drives},
         {"estimation", est},
         {"render", {{"tiled", c.render.tiled}}}};
  if (!c.scene.empty()) j["scene"] = c.scene.string();
  return j;
}

Trajectory load_drive_trajectory(const DriveSpec& spec, const SimConfig& sim) {
  Trajectory t;
  t.region_radius = spec.radius > 0.0 ? spec.radius : sim.drive_radius();
  if (!spec.points.empty()) {
    for (std::size_t f = 0; f < spec.points.size(); ++f) {
      t.frames.push_back({spec.start_frame + static_cast<int>(f), spec.points[f]});
    }
  } else {
    const geometry::TrajectoryBundle b = geometry::load_bundle(spec.trajectory);
    if (spec.point_id >= b.points) {
      throw Error(ErrorKind::validation, spec.trajectory.string() + ": no point " + std::to_string(spec.point_id));
    }
    for (std::size_t f = 0; f < b.frames; ++f) {
      t.frames.push_back({spec.start_frame + static_cast<int>(f), b.at(f, spec.point_id)});
    }
  }
  t.validate();
  return t;
}

void prepare_for_simulation(Scene& scene, const RunConfig& config) {
  const std::size_t n = scene.size();
  if (n == 0) return;
  double volume = config.particle_volume;
  if (volume <= 0.0) {
    // floor each extent at one cell so flat scenes still get a volume
    const Vec3 extent = scene::bounds_of(scene.particles).extent().cwiseMax(config.sim.dx());
    volume = extent.prod() / static_cast<double>(n);
  }
  assign_uniform_mass(scene, config.sim.density, volume);
  const double mu = config.material.mu;
  scene.material = MaterialField::uniform(
      n, {mu, lambda_from_shear(mu, config.sim.poisson_nu), config.material.eta, config.material.gamma});
}

std::vector<motion::Drive> build_drives(const Scene& scene, const RunConfig& config) {
  std::vector<motion::Drive> drives;
  for (const auto& spec : config.drives) {
    drives.push_back(
        motion::Drive::from_trajectory(scene.particles, load_drive_trajectory(spec, config.sim), config.sim.frame_dt));
  }
  return drives;
}

}  // namespace tissuesim::app
