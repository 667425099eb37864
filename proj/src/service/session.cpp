#include "tissuesim/service/session.hpp"

#include <algorithm>
#include <cmath>

#include "tissuesim/core/camera_json.hpp"
#include "tissuesim/core/error.hpp"
#include "tissuesim/core/json_util.hpp"
#include "tissuesim/estimate/cluster.hpp"
#include "tissuesim/motion/drive.hpp"
#include "tissuesim/render/image_io.hpp"
#include "tissuesim/scene/normalize.hpp"

namespace tissuesim::service {

using nlohmann::json;

namespace {

Envelope error_envelope(const std::string& message, const std::string& request = {}) {
  Envelope e{"error", {{"message", message}}};
  if (!request.empty()) e.body["request"] = request;
  return e;
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::protocol, what); }

double number(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_number()) bad(std::string("field '") + key + "' must be a number");
  const double v = body.at(key).get<double>();
  if (!std::isfinite(v)) bad(std::string("field '") + key + "' must be finite");
  return v;
}

int integer(const json& body, const char* key) {
  if (!body.contains(key) || !body.at(key).is_number_integer()) {
    bad(std::string("field '") + key + "' must be an integer");
  }
  return body.at(key).get<int>();
}

void check_range(const char* name, double v, const estimate::ParamBounds& b) {
  if (!(v >= b.lo && v <= b.hi)) {
    throw Error(ErrorKind::validation, std::string(name) + " = " + std::to_string(v) + " outside [" +
                                           std::to_string(b.lo) + ", " + std::to_string(b.hi) + "]");
  }
}

}  // namespace

Session::Session(Scene scene, SessionConfig config) : config_(std::move(config)), initial_(std::move(scene)) {
  config_.sim.validate();
  config_.camera.validate();
  if (initial_.size() == 0) throw Error(ErrorKind::validation, "empty scene");
  if (!(config_.fps > 0.0)) throw Error(ErrorKind::validation, "fps must be positive");
  config_.cluster_count = std::clamp<int>(config_.cluster_count, 1, static_cast<int>(initial_.size()));
  estimate::assign_clusters(initial_, config_.cluster_count);
  if (config_.steps_per_batch <= 0) config_.steps_per_batch = std::max<long>(1, config_.sim.frame_stride() / 10);

  initial_params_.resize(config_.cluster_count);
  std::vector<bool> seen(config_.cluster_count, false);
  for (std::size_t i = 0; i < initial_.size(); ++i) {
    const int c = initial_.material.cluster_id[i];
    if (seen[c]) continue;
    seen[c] = true;
    initial_params_[c] = {initial_.material.mu[i], initial_.material.eta[i], initial_.material.gamma[i]};
  }
  params_ = initial_params_;

  sim_ = std::make_unique<mpm::Simulator>(initial_, config_.sim);
  {
    std::lock_guard lk(mutex_);
    publish();
  }
  thread_ = std::thread([this] { worker(); });
}

Session::~Session() {
  {
    std::lock_guard lk(mutex_);
    stop_ = true;
  }
  cv_.notify_all();
  stepped_.notify_all();
  thread_.join();
}

void Session::publish() {
  auto s = std::make_shared<Snapshot>();
  s->particles = sim_->scene().particles;
  s->sim_time = sim_->time();
  s->steps = sim_->steps_taken();
  s->running = running_;
  snapshot_ = std::move(s);
}

std::shared_ptr<const Snapshot> Session::snapshot() const {
  std::lock_guard lk(mutex_);
  return snapshot_;
}

void Session::submit(std::function<void()> fn) {
  std::packaged_task<void()> task(std::move(fn));
  auto done = task.get_future();
  {
    std::lock_guard lk(mutex_);
    if (stop_) throw Error(ErrorKind::protocol, "session is shutting down");
    queue_.push_back(std::move(task));
  }
  cv_.notify_all();
  done.get();
}

void Session::worker() {
  std::unique_lock lk(mutex_);
  for (;;) {
    cv_.wait(lk, [&] { return stop_ || !queue_.empty() || running_; });
    if (stop_) break;
    while (!queue_.empty()) {
      auto task = std::move(queue_.front());
      queue_.pop_front();
      lk.unlock();
      task();
      lk.lock();
    }
    if (!running_) continue;

    lk.unlock();
    std::string error;
    try {
      for (long i = 0; i < config_.steps_per_batch; ++i) sim_->step();
    } catch (const Error& e) {
      error = e.what();
    }
    lk.lock();
    if (!error.empty()) {
      running_ = false;
      events_.push_back({"error", {{"message", error}, {"source", "simulation"}}});
    }
    publish();
    stepped_.notify_all();
  }
}

void Session::rebuild_drives() {
  sim_->clear_drives();
  for (const auto& [id, d] : worker_drags_) {
    motion::Drive drive;
    drive.tagged = d.tagged;
    drive.velocity = [m = d.motion](double t) -> std::optional<Vec3> {
      return t < m->until ? m->velocity : Vec3::Zero();
    };
    sim_->add_drive(std::move(drive));
  }
}

Scene Session::current_scene() {
  Scene out;
  submit([&] { out = sim_->scene(); });
  return out;
}

void Session::wait_for_steps(long steps) {
  std::unique_lock lk(mutex_);
  const long target = snapshot_->steps + steps;
  stepped_.wait(lk, [&] { return stop_ || !running_ || snapshot_->steps >= target; });
}

std::vector<Envelope> Session::take_events() {
  std::lock_guard lk(mutex_);
  return std::exchange(events_, {});
}

std::vector<Envelope> Session::handle(const Envelope& message) {
  return handle(message, std::chrono::duration<double>(Clock::now() - started_).count());
}

std::vector<Envelope> Session::handle(const Envelope& m, double wall) {
  try {
    if (m.kind == "hello") return {on_hello(m.body)};
    if (m.kind == "start") return {on_run(true)};
    if (m.kind == "pause") return {on_run(false)};
    if (m.kind == "reset") return {on_reset()};
    if (m.kind == "set_params") return {on_set_params(m.body)};
    if (m.kind == "drag_start") return {on_drag_start(m.body, wall)};
    if (m.kind == "drag_move") return {on_drag_move(m.body, wall)};
    if (m.kind == "drag_end") return {on_drag_end(m.body)};
    return {error_envelope("unknown message kind '" + m.kind + "'", m.kind)};
  } catch (const Error& e) {
    return {error_envelope(e.what(), m.kind)};
  } catch (const json::exception& e) {
    return {error_envelope(std::string("malformed message: ") + e.what(), m.kind)};
  }
}

std::vector<std::string> Session::handle_raw(std::string_view raw) {
  std::vector<std::string> out;
  try {
    for (const auto& r : handle(decode(raw))) out.push_back(encode(r));
  } catch (const Error& e) {
    out.push_back(encode(error_envelope(e.what())));
  }
  return out;
}

Envelope Session::on_hello(const json& body) {
  const int version = integer(body, "version");
  if (version != kProtocolVersion) {
    bad("unsupported protocol version " + std::to_string(version) + " (server speaks " +
        std::to_string(kProtocolVersion) + ")");
  }
  const auto b = scene::bounds_of(initial_.particles);
  json params = json::array();
  for (const auto& p : params_) params.push_back({{"mu", p.mu}, {"eta", p.eta}, {"gamma", p.gamma}});
  const auto snap = snapshot();
  return {"welcome",
          {{"version", kProtocolVersion},
           {"bounds", {{"min", json_util::vec3_json(b.min)}, {"max", json_util::vec3_json(b.max)}}},
           {"camera", camera_to_json(config_.camera)},
           {"defaults",
            {{"params", params},
             {"param_bounds",
              {{"mu", {config_.bounds.mu.lo, config_.bounds.mu.hi}},
               {"eta", {config_.bounds.eta.lo, config_.bounds.eta.hi}},
               {"gamma", {config_.bounds.gamma.lo, config_.bounds.gamma.hi}}}},
             {"drag_radius", config_.sim.drive_radius()},
             {"fps", config_.fps},
             {"dt", config_.sim.dt},
             {"frame_dt", config_.sim.frame_dt}}},
           {"cluster_count", config_.cluster_count},
           {"particle_count", initial_.size()},
           {"running", snap->running},
           {"sim_time", snap->sim_time}}};
}

Envelope Session::on_run(bool running) {
  submit([&] {
    std::lock_guard lk(mutex_);
    running_ = running;
    publish();
  });
  const auto snap = snapshot();
  return {"status", {{"running", snap->running}, {"sim_time", snap->sim_time}, {"steps", snap->steps}}};
}

Envelope Session::on_reset() {
  submit([&] {
    worker_drags_.clear();
    sim_->reset(initial_);
    sim_->clear_drives();
    std::lock_guard lk(mutex_);
    running_ = false;
    publish();
  });
  handler_drags_.clear();
  params_ = initial_params_;
  const auto snap = snapshot();
  return {"status", {{"running", false}, {"sim_time", snap->sim_time}, {"steps", snap->steps}, {"reset", true}}};
}

Envelope Session::on_set_params(const json& body) {
  const int c = integer(body, "cluster");
  if (c < 0 || c >= config_.cluster_count) bad("cluster " + std::to_string(c) + " does not exist");
  auto params = params_;
  if (body.contains("mu")) params[c].mu = number(body, "mu");
  if (body.contains("eta")) params[c].eta = number(body, "eta");
  if (body.contains("gamma")) params[c].gamma = number(body, "gamma");
  check_range("mu", params[c].mu, config_.bounds.mu);
  check_range("eta", params[c].eta, config_.bounds.eta);
  check_range("gamma", params[c].gamma, config_.bounds.gamma);
  submit([&] {
    sim_->set_material(estimate::expand_params(sim_->scene().material, params, config_.sim.poisson_nu));
  });
  params_ = params;
  const auto& p = params_[c];
  return {"params",
          {{"cluster", c},
           {"mu", p.mu},
           {"lambda", lambda_from_shear(p.mu, config_.sim.poisson_nu)},
           {"eta", p.eta},
           {"gamma", p.gamma}}};
}

Envelope Session::on_drag_start(const json& body, double wall) {
  const double x = number(body, "x"), y = number(body, "y");
  const double radius = body.contains("radius") ? number(body, "radius") : config_.sim.drive_radius();
  if (!(radius > 0.0)) bad("radius must be positive");
  const auto snap = snapshot();
  const Camera& cam = config_.camera;
  const int px = static_cast<int>(std::floor(x)), py = static_cast<int>(std::floor(y));
  if (px < 0 || py < 0 || px >= cam.width || py >= cam.height) bad("no tissue under cursor");
  const render::RenderResult r = render::render(snap->particles, cam, config_.render);
  const std::size_t pixel = static_cast<std::size_t>(py) * cam.width + px;
  if (r.hit[pixel] < 0) bad("no tissue under cursor");
  const double depth = r.depth[pixel];
  const Vec3 point = cam.unproject(x, y, depth);
  auto tagged = motion::select_region(snap->particles, point, radius);

  const int id = next_drag_id_++;
  const std::size_t count = tagged.size();
  submit([&] {
    worker_drags_[id] = {std::move(tagged), std::make_shared<DragMotion>()};
    rebuild_drives();
  });
  handler_drags_[id] = {depth, point, wall};
  return {"drag_started", {{"drag_id", id}, {"point", json_util::vec3_json(point)}, {"tagged", count}}};
}

Envelope Session::on_drag_move(const json& body, double wall) {
  const int id = integer(body, "drag_id");
  auto it = handler_drags_.find(id);
  if (it == handler_drags_.end()) bad("unknown drag_id " + std::to_string(id));
  const double x = number(body, "x"), y = number(body, "y");
  HandlerDrag& d = it->second;
  const Vec3 target = config_.camera.unproject(x, y, d.depth);
  const double interval = std::clamp(wall - d.last_wall, config_.min_drag_interval, config_.max_drag_interval);
  const Vec3 velocity = (target - d.target) / interval;
  submit([&] {
    DragMotion& m = *worker_drags_.at(id).motion;
    m.velocity = velocity;
    m.until = sim_->time() + interval;
  });
  d.target = target;
  d.last_wall = wall;
  return {"drag_moved",
          {{"drag_id", id},
           {"target", json_util::vec3_json(target)},
           {"velocity", json_util::vec3_json(velocity)},
           {"interval", interval}}};
}

Envelope Session::on_drag_end(const json& body) {
  const int id = integer(body, "drag_id");
  if (!handler_drags_.count(id)) bad("unknown drag_id " + std::to_string(id));
  submit([&] {
    worker_drags_.erase(id);
    rebuild_drives();
  });
  handler_drags_.erase(id);
  return {"drag_ended", {{"drag_id", id}}};
}

std::optional<Envelope> Session::render_frame() {
  const auto snap = snapshot();
  if (!snap->running) return std::nullopt;
  render::RenderResult r;
  std::vector<std::uint8_t> png;
  try {
    r = render::render(snap->particles, config_.camera, config_.render);
    png = render::encode_png(r.rgb);
  } catch (const std::exception& e) {
    on_run(false);
    return error_envelope(std::string("render failed, session paused: ") + e.what());
  }
  return Envelope{"frame",
                  {{"frame_index", frame_index_++},
                   {"sim_time", snap->sim_time},
                   {"steps", snap->steps},
                   {"width", r.rgb.width},
                   {"height", r.rgb.height},
                   {"encoding", "png"},
                   {"image", base64_encode(png)}}};
}

}  // namespace tissuesim::service
