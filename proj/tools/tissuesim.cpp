#include <iostream>

#include "CLI11.hpp"
#include "tissuesim/app/commands.hpp"
#include "tissuesim/app/run_config.hpp"

using namespace tissuesim::app;

namespace {

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--seed", flags.seed, "random seed")->capture_default_str();
  cmd->add_flag("--deterministic,!--no-deterministic", flags.deterministic,
                "fixed reduction order (bit-reproducible runs)")
      ->capture_default_str();
  cmd->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soft-tissue simulation toolkit"};
  app.require_subcommand(1);
  CommonFlags flags;

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "normalize and thicken a splat scene");
  prepare->add_option("scene_in", prep.scene_in, "input scene (.tss or .ply)")->required();
  prepare->add_option("scene_out", prep.scene_out, "output scene")->required();
  prepare->add_option("--layers", prep.layers, "thickening layers L")->capture_default_str();
  prepare->add_option("--z-expand", prep.z_expand, "z_max growth of the keep box")->capture_default_str();
  prepare->add_option("--cap", prep.cap, "upper bound on the output particle count");
  prepare->add_option("--margin", prep.margin, "normalization margin")->capture_default_str();
  prepare->add_flag("!--no-thicken", prep.thicken, "only normalize");
  add_common(prepare, flags);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run the simulation and write frames + diagnostics");
  simulate->add_option("--scene", sim.scene, "scene file (overrides the run config)");
  simulate->add_option("--config", sim.config, "run config (JSON)");
  simulate->add_option("--out", sim.out_dir, "output directory")->required();
  simulate->add_option("--steps", sim.steps, "number of steps (overrides the run config)");
  simulate->add_flag("!--no-frames", sim.write_frames, "write diagnostics only");
  add_common(simulate, flags);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "estimate per-cluster parameters from observed frames");
  estimate->add_option("--scene", est.scene, "scene file (overrides the run config)");
  estimate->add_option("--observations", est.observations, "observation directory")->required();
  estimate->add_option("--config", est.config, "run config (JSON)");
  estimate->add_option("--out", est.out_dir, "output directory")->required();
  add_common(estimate, flags);

  RefineArgs ref;
  auto* refine = app.add_subcommand("refine-traj", "smooth a trajectory bundle");
  refine->add_option("bundle_in", ref.bundle_in)->required();
  refine->add_option("bundle_out", ref.bundle_out)->required();
  refine->add_option("--k", ref.k, "neighbors per point")->capture_default_str();
  refine->add_option("--iterations", ref.iterations)->capture_default_str();
  refine->add_option("--lambda-data", ref.lambda_data)->capture_default_str();
  refine->add_option("--lambda-traj", ref.lambda_traj)->capture_default_str();
  add_common(refine, flags);

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "render a scene to PNG");
  render->add_option("scene", ren.scene)->required();
  render->add_option("out", ren.out)->required();
  render->add_option("--camera", ren.camera, "camera JSON (default: top-down view)");
  add_common(render, flags);

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "host interactive sessions at ws://host:port/session");
  serve->add_option("--scene", srv.scene, "scene file (overrides the run config)");
  serve->add_option("--config", srv.config, "run config (JSON)");
  serve->add_option("--host", srv.host)->capture_default_str();
  serve->add_option("--port", srv.port)->capture_default_str();
  serve->add_option("--fps", srv.fps, "frame stream rate")->capture_default_str();
  serve->add_option("--duration", srv.duration, "stop after this many seconds");
  add_common(serve, flags);

  auto* defaults = app.add_subcommand("defaults", "print the default run config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*prepare) return cmd_prepare(prep, flags, std::cout, std::cerr);
  if (*simulate) return cmd_simulate(sim, flags, std::cout, std::cerr);
  if (*estimate) return cmd_estimate(est, flags, std::cout, std::cerr);
  if (*refine) return cmd_refine_traj(ref, flags, std::cout, std::cerr);
  if (*render) return cmd_render(ren, flags, std::cout, std::cerr);
  if (*serve) return cmd_serve(srv, flags, std::cout, std::cerr);
  if (*defaults) {
    std::cout << to_json(RunConfig{}).dump(2) << '\n';
    return kExitOk;
  }
  return kExitUsage;
}
