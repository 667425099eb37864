#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tissuesim/core/camera.hpp"
#include "tissuesim/core/config.hpp"
#include "tissuesim/core/particle.hpp"
#include "tissuesim/estimate/estimate.hpp"
#include "tissuesim/mpm/simulator.hpp"
#include "tissuesim/render/rasterizer.hpp"
#include "tissuesim/service/protocol.hpp"

namespace tissuesim::service {

struct ParamLimits {
  estimate::ParamBounds mu{1e2, 1e6};
  estimate::ParamBounds eta{1e-2, 1e3};
  estimate::ParamBounds gamma{1e-3, 1e2};
};

struct SessionConfig {
  SimConfig sim;
  Camera camera;
  render::RenderOptions render;
  ParamLimits bounds;
  int cluster_count = 1;
  double fps = 10.0;
  long steps_per_batch = 0;       // 0: a tenth of a video frame
  double min_drag_interval = 1.0 / 120.0;
  double max_drag_interval = 1.0 / 5.0;
};

/// Immutable post-step state shared with message handlers and the frame
/// stream.
struct Snapshot {
  std::vector<Particle> particles;
  double sim_time = 0.0;
  long steps = 0;
  bool running = false;
};

/// One interactive session. A worker thread owns the simulator and applies
/// queued commands between step batches; handlers only read snapshots.
class Session {
 public:
  using Clock = std::chrono::steady_clock;

  /// `scene` should already carry masses and a material field; clusters are
  /// assigned here.
  Session(Scene scene, SessionConfig config);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Responses to one message. Errors come back as "error" envelopes and leave
  /// the session as it was. `wall_seconds` times drag moves.
  std::vector<Envelope> handle(const Envelope& message, double wall_seconds);
  std::vector<Envelope> handle(const Envelope& message);
  /// Same, from the wire format; a malformed envelope yields one error.
  std::vector<std::string> handle_raw(std::string_view raw);

  /// Next frame message, or nothing while paused.
  std::optional<Envelope> render_frame();

  /// Events raised by the worker (simulation errors) since the last call.
  std::vector<Envelope> take_events();

  std::shared_ptr<const Snapshot> snapshot() const;
  const Scene& initial_scene() const { return initial_; }
  const SessionConfig& config() const { return config_; }
  /// Scene as the worker currently holds it; waits for the worker.
  Scene current_scene();
  /// Blocks until the worker has taken at least `steps` steps since the call.
  void wait_for_steps(long steps);

 private:
  struct DragMotion {
    Vec3 velocity = Vec3::Zero();
    double until = 0.0;
  };
  struct WorkerDrag {
    std::vector<std::size_t> tagged;
    std::shared_ptr<DragMotion> motion;
  };
  struct HandlerDrag {
    double depth = 0.0;
    Vec3 target = Vec3::Zero();
    double last_wall = 0.0;
  };

  // Runs `fn` on the worker between step batches and waits for it.
  void submit(std::function<void()> fn);
  void worker();
  void publish();
  void rebuild_drives();

  Envelope on_hello(const nlohmann::json& body);
  Envelope on_run(bool running);
  Envelope on_reset();
  Envelope on_set_params(const nlohmann::json& body);
  Envelope on_drag_start(const nlohmann::json& body, double wall);
  Envelope on_drag_move(const nlohmann::json& body, double wall);
  Envelope on_drag_end(const nlohmann::json& body);

  SessionConfig config_;
  Scene initial_;
  std::vector<estimate::ClusterParams> initial_params_;
  Clock::time_point started_ = Clock::now();

  // handler side (transport thread only)
  std::map<int, HandlerDrag> handler_drags_;
  std::vector<estimate::ClusterParams> params_;
  int next_drag_id_ = 1;
  long frame_index_ = 0;

  // worker side
  std::unique_ptr<mpm::Simulator> sim_;
  std::map<int, WorkerDrag> worker_drags_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::packaged_task<void()>> queue_;
  bool running_ = false;
  bool stop_ = false;
  std::shared_ptr<const Snapshot> snapshot_;
  std::vector<Envelope> events_;
  std::condition_variable stepped_;
  std::thread thread_;
};

}  // namespace tissuesim::service
