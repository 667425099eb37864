#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "tissuesim/core/error.hpp"

namespace tissuesim::app {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Usage, input and validation problems map to 2; simulation failures to 1.
int exit_code_for(ErrorKind kind);

struct CommonFlags {
  std::uint64_t seed = 0;
  bool deterministic = true;
  int threads = 1;
};

struct PrepareArgs {
  std::filesystem::path scene_in;
  std::filesystem::path scene_out;
  int layers = 1000;
  double z_expand = 0.25;
  std::optional<std::size_t> cap;
  double margin = 0.05;
  bool thicken = true;
};

struct SimulateArgs {
  std::filesystem::path scene;  // empty: the run config's scene
  std::filesystem::path config;  // empty: built-in defaults
  std::filesystem::path out_dir;
  std::optional<long> steps;
  bool write_frames = true;
};

struct EstimateArgs {
  std::filesystem::path scene;
  std::filesystem::path observations;
  std::filesystem::path config;
  std::filesystem::path out_dir;
};

struct RefineArgs {
  std::filesystem::path bundle_in;
  std::filesystem::path bundle_out;
  std::size_t k = 8;
  int iterations = 200;
  double lambda_data = 1.0;
  double lambda_traj = 1.0;
};

struct RenderArgs {
  std::filesystem::path scene;
  std::filesystem::path camera;  // empty: the default camera
  std::filesystem::path out;
};

struct ServeArgs {
  std::filesystem::path scene;
  std::filesystem::path config;
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  double fps = 10.0;
  std::optional<double> duration;  // seconds; unset serves until interrupted
};

// Each command reports progress on `out`, diagnostics on `err`, and returns an
// exit code instead of throwing.
int cmd_prepare(const PrepareArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err);
int cmd_estimate(const EstimateArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err);
int cmd_refine_traj(const RefineArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err);
int cmd_render(const RenderArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err);
int cmd_serve(const ServeArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err);

}  // namespace tissuesim::app
