#include "tissuesim/app/commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>

#include "json.hpp"
#include "tissuesim/app/observation_io.hpp"
#include "tissuesim/app/run_config.hpp"
#include "tissuesim/estimate/cluster.hpp"
#include "tissuesim/estimate/estimate.hpp"
#include "tissuesim/geometry/bundle.hpp"
#include "tissuesim/geometry/regularizers.hpp"
#include "tissuesim/mpm/simulator.hpp"
#include "tissuesim/render/image_io.hpp"
#include "tissuesim/render/rasterizer.hpp"
#include "tissuesim/scene/normalize.hpp"
#include "tissuesim/scene/scene_io.hpp"
#include "tissuesim/scene/thicken.hpp"
#include "tissuesim/service/server.hpp"

namespace tissuesim::app {

namespace {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

Scene load_any_scene(const std::filesystem::path& path) {
  if (path.extension() == ".ply") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "file not found: " + path.string());
    try {
      return scene::read_ply(in);
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
  }
  return scene::load_scene(path);
}

RunConfig config_or_defaults(const std::filesystem::path& path, const CommonFlags& flags) {
  RunConfig c = path.empty() ? RunConfig{} : load_run_config(path);
  c.sim.deterministic = flags.deterministic;
  c.render.threads = flags.threads;
  c.estimation.threads = flags.threads;
  return c;
}

std::filesystem::path pick_scene(const std::filesystem::path& arg, const RunConfig& config) {
  if (!arg.empty()) return arg;
  if (config.scene.empty()) throw Error(ErrorKind::validation, "no scene given on the command line or in the run config");
  return config.scene;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain:
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::io:
    case ErrorKind::empty_region:
    case ErrorKind::protocol:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

int cmd_prepare(const PrepareArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Scene s = load_any_scene(args.scene_in);
    const std::size_t before = s.size();
    const scene::NormalizeTransform t = scene::normalize(s, args.margin);
    nlohmann::json meta{{"input", args.scene_in.string()},
                        {"input_count", before},
                        {"normalize", {{"scale", t.scale}, {"offset", {t.offset.x(), t.offset.y(), t.offset.z()}}}}};
    if (args.thicken) {
      scene::ThickenOptions opt;
      opt.layers = args.layers;
      opt.z_expand = args.z_expand;
      opt.seed = flags.seed;
      opt.cap = args.cap;
      // the input frame's origin is the camera center
      opt.ray_origin = t.apply(Vec3::Zero());
      scene::ThickenResult r = scene::thicken(s, opt);
      s = std::move(r.scene);
      meta["thicken"] = {{"layers", args.layers},  {"z_expand", args.z_expand}, {"seed", flags.seed},
                         {"candidates", r.candidates}, {"kept", r.kept},      {"emitted", r.emitted},
                         {"capped", r.capped}};
      if (args.cap) meta["thicken"]["cap"] = *args.cap;
    }
    meta["output_count"] = s.size();
    scene::save_scene(s, args.scene_out);
    std::ofstream(args.scene_out.string() + ".json") << meta.dump(2) << '\n';
    out << "particles: " << before << " -> " << s.size() << '\n';
    return kExitOk;
  });
}

int cmd_simulate(const SimulateArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = config_or_defaults(args.config, flags);
    Scene s = load_any_scene(pick_scene(args.scene, config));
    prepare_for_simulation(s, config);
    const long steps = args.steps.value_or(config.steps);
    if (steps < 0) throw Error(ErrorKind::validation, "steps must be >= 0");

    std::filesystem::create_directories(args.out_dir);
    std::ofstream diag(args.out_dir / "diagnostics.csv");
    if (!diag) throw Error(ErrorKind::io, "cannot write " + (args.out_dir / "diagnostics.csv").string());
    diag << "frame,step,time,total_mass,momentum_x,momentum_y,momentum_z,max_velocity\n";
    diag << std::setprecision(17);

    mpm::Simulator sim(std::move(s), config.sim);
    for (auto& d : build_drives(sim.scene(), config)) sim.add_drive(std::move(d));
    const long stride = config.sim.frame_stride();
    long frames = 0;
    mpm::run(
        sim, steps, stride,
        [&](long frame, const Scene& scene) {
          ++frames;
          if (!args.write_frames) return;
          const auto image = render::render(scene.particles, config.camera, config.render).rgb;
          render::write_png(image, args.out_dir / frame_file_name(static_cast<int>(frame)));
        },
        [&](long step, const mpm::StepDiagnostics& d) {
          diag << step / stride << ',' << step << ',' << step * config.sim.dt << ',' << d.total_mass << ','
               << d.total_momentum.x() << ',' << d.total_momentum.y() << ',' << d.total_momentum.z() << ','
               << d.max_velocity << '\n';
        });
    out << "steps: " << steps << ", frames: " << frames << '\n';
    return kExitOk;
  });
}

int cmd_estimate(const EstimateArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = config_or_defaults(args.config, flags);
    estimate::Problem pb;
    pb.observations = load_observations(args.observations);
    pb.scene = load_any_scene(pick_scene(args.scene, config));
    prepare_for_simulation(pb.scene, config);
    estimate::assign_clusters(pb.scene, config.estimation.cluster_count);
    pb.sim = config.sim;
    pb.drives = build_drives(pb.scene, config);
    pb.render_options = config.render;

    const estimate::EstimationResult r = estimate::estimate(pb, config.estimation);

    std::filesystem::create_directories(args.out_dir);
    estimate::save_material_table(r.params, config.sim.poisson_nu, args.out_dir / "material.csv");
    estimate::save_cluster_map(pb.scene.material, args.out_dir / "clusters.csv");
    std::ofstream trace(args.out_dir / "loss_trace.csv");
    trace << "round,last_frame,step,loss,smoothed\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.rounds.size(); ++i) {
      const auto& t = r.rounds[i];
      for (std::size_t k = 0; k < t.losses.size(); ++k) {
        trace << i + 1 << ',' << t.last_frame << ',' << k << ',' << t.losses[k] << ','
              << (t.smoothed && k + 1 == t.losses.size() ? 1 : 0) << '\n';
      }
    }
    out << "rounds: " << r.rounds.size() << ", simulations: " << r.simulations << ", best loss: " << r.best_loss
        << '\n';
    for (std::size_t c = 0; c < r.params.size(); ++c) {
      out << "cluster " << c << ": mu " << r.params[c].mu << " eta " << r.params[c].eta << " gamma "
          << r.params[c].gamma << '\n';
    }
    if (r.budget_exhausted) err << "warning: simulation budget exhausted; results are the best found so far\n";
    return kExitOk;
  });
}

int cmd_refine_traj(const RefineArgs& args, const CommonFlags&, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const geometry::TrajectoryBundle in = geometry::load_bundle(args.bundle_in);
    geometry::RefineOptions opt;
    opt.k = args.k;
    opt.iterations = args.iterations;
    opt.lambda_data = args.lambda_data;
    opt.lambda_traj = args.lambda_traj;
    const geometry::RefineResult r = geometry::refine_trajectories(in, opt);
    geometry::save_bundle(r.bundle, args.bundle_out);
    out << "iterations: " << r.iterations << ", objective: " << r.objective.front() << " -> " << r.objective.back()
        << '\n';
    return kExitOk;
  });
}

int cmd_render(const RenderArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scene s = load_any_scene(args.scene);
    const Camera camera = args.camera.empty() ? RunConfig::default_camera() : load_camera(args.camera);
    render::RenderOptions opt;
    opt.threads = flags.threads;
    render::write_png(render::render(s.particles, camera, opt).rgb, args.out);
    out << "rendered " << s.size() << " splats to " << args.out.string() << '\n';
    return kExitOk;
  });
}

int cmd_serve(const ServeArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = config_or_defaults(args.config, flags);
    Scene s = load_any_scene(pick_scene(args.scene, config));
    prepare_for_simulation(s, config);
    service::SessionConfig sc;
    sc.sim = config.sim;
    sc.camera = config.camera;
    sc.render = config.render;
    sc.bounds = {config.estimation.mu, config.estimation.eta, config.estimation.gamma};
    sc.cluster_count = config.estimation.cluster_count;
    sc.fps = args.fps;
    service::Server server(std::move(s), sc, args.host, args.port);
    out << "serving ws://" << args.host << ':' << server.port() << "/session" << std::endl;
    server.run(args.duration);
    return kExitOk;
  });
}

}  // namespace tissuesim::app
