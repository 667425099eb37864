#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <fstream>
#include <random>
#include <thread>

#include "doctest.h"
#include "test_support.hpp"
#include "tissuesim/core/error.hpp"
#include "tissuesim/render/image_io.hpp"
#include "tissuesim/service/protocol.hpp"
#include "tissuesim/service/server.hpp"
#include "tissuesim/service/session.hpp"

using namespace tissuesim;
using namespace tissuesim::service;
using nlohmann::json;

namespace {

Camera top_camera(int size) {
  Camera c;
  c.width = c.height = size;
  c.fx = c.fy = 1.2 * size;
  c.cx = c.cy = size / 2.0;
  c.rotation = Vec3(1.0, -1.0, -1.0).asDiagonal();
  c.translation = Vec3(0.0, 0.0, 2.5);
  return c;
}

Scene block(int per_axis, double spacing) {
  const double half = 0.5 * spacing * (per_axis - 1);
  const double floor_z = -1.0 + 2.0 * 0.04;
  Scene s = testing::lattice_block(Vec3(-half, -half, floor_z), Vec3(half, half, floor_z + 2 * half) + Vec3::Constant(1e-9), spacing);
  for (auto& p : s.particles) {
    p.scale = Vec3::Constant(0.5 * spacing);
    p.color = Vec3(0.8, 0.3 + 0.5 * (p.position.x() + half), 0.3);
  }
  s.material = MaterialField::uniform(s.size(), {500.0, lambda_from_shear(500.0, 0.45), 1.0, 1.0});
  return s;
}

SessionConfig session_config(int image = 64) {
  SessionConfig c;
  c.camera = top_camera(image);
  c.cluster_count = 2;
  c.steps_per_batch = 20;
  return c;
}

std::map<std::string, json> schema_server_kinds() {
  std::ifstream in(std::string(TISSUESIM_SOURCE_DIR) + "/schema/session_v1.json");
  REQUIRE(in);
  const json schema = json::parse(in);
  std::map<std::string, json> out;
  for (const auto& [kind, def] : schema.at("server").items()) out[kind] = def;
  return out;
}

// Every server envelope must be a kind listed in the schema and carry its
// required fields.
void check_schema(const Envelope& e) {
  static const auto kinds = schema_server_kinds();
  REQUIRE_MESSAGE(kinds.count(e.kind), e.kind);
  const json& def = kinds.at(e.kind);
  if (def.contains("required")) {
    for (const auto& key : def.at("required")) CHECK_MESSAGE(e.body.contains(key.get<std::string>()), e.kind, key);
  }
}

Envelope one(std::vector<Envelope> r) {
  REQUIRE(r.size() == 1);
  check_schema(r[0]);
  return r[0];
}

Envelope msg(const std::string& kind, json body = json::object()) { return {kind, std::move(body)}; }

}  // namespace

TEST_CASE("envelope encoding") {
  const Envelope e{"drag_move", {{"drag_id", 3}, {"x", 1.5}, {"y", 2}}};
  const std::string wire = encode(e);
  const std::string body = e.body.dump();
  CHECK(wire == "drag_move " + std::to_string(body.size()) + "\n" + body);
  const Envelope back = decode(wire);
  CHECK(back.kind == e.kind);
  CHECK(back.body == e.body);
  CHECK(decode("start 2\n{}").kind == "start");

  for (const char* bad : {"", "start", "start 2{}", "start x\n{}", "start 3\n{}", "start 1\n{", "start 2\n[]",
                          " 2\n{}", "start -2\n{}"}) {
    CHECK_THROWS_AS(decode(bad), Error);
  }
  // the length counts bytes, not characters
  const Envelope utf{"error", {{"message", "\xc2\xb5"}}};
  CHECK(decode(encode(utf)).body == utf.body);
}

TEST_CASE("base64") {
  auto bytes = [](const std::string& s) { return std::vector<std::uint8_t>(s.begin(), s.end()); };
  CHECK(base64_encode(bytes("")) == "");
  CHECK(base64_encode(bytes("f")) == "Zg==");
  CHECK(base64_encode(bytes("fo")) == "Zm8=");
  CHECK(base64_encode(bytes("foo")) == "Zm9v");
  CHECK(base64_encode(bytes("foob")) == "Zm9vYg==");
  CHECK(base64_encode(bytes("foobar")) == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYg==") == bytes("foob"));
  std::mt19937 rng(5);
  for (int n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    CHECK(base64_decode(base64_encode(b)) == b);
  }
}

TEST_CASE("session messages") {
  Session s(block(6, 0.06), session_config());

  SUBCASE("hello") {
    const Envelope w = one(s.handle(msg("hello", {{"version", 1}})));
    CHECK(w.kind == "welcome");
    CHECK(w.body["version"] == 1);
    CHECK(w.body["particle_count"] == 216);
    CHECK(w.body["cluster_count"] == 2);
    CHECK(w.body["defaults"]["params"].size() == 2);
    CHECK(w.body["camera"]["width"] == 64);
    const Envelope v2 = one(s.handle(msg("hello", {{"version", 2}})));
    CHECK(v2.kind == "error");
    CHECK(v2.body["message"].get<std::string>().find("version") != std::string::npos);
  }

  SUBCASE("malformed input leaves the session usable") {
    for (const char* raw : {"garbage", "hello 5\n{}", "hello 2\n{}", "nope 2\n{}"}) {
      const auto r = s.handle_raw(raw);
      REQUIRE(r.size() == 1);
      CHECK(decode(r[0]).kind == "error");
    }
    CHECK(one(s.handle(msg("drag_start", {{"x", "left"}, {"y", 3}}))).kind == "error");
    CHECK(decode(s.handle_raw(encode(msg("hello", {{"version", 1}})))[0]).kind == "welcome");
  }

  SUBCASE("paused sessions stream nothing") {
    CHECK(!s.render_frame());
    CHECK(one(s.handle(msg("start"))).body["running"] == true);
    const auto f = s.render_frame();
    REQUIRE(f);
    check_schema(*f);
    CHECK(one(s.handle(msg("pause"))).body["running"] == false);
    CHECK(!s.render_frame());
  }

  SUBCASE("an idle running scene renders identical frames") {
    one(s.handle(msg("start")));
    s.wait_for_steps(40);
    const auto a = s.render_frame();
    s.wait_for_steps(40);
    const auto b = s.render_frame();
    REQUIRE(a);
    REQUIRE(b);
    CHECK(b->body["steps"].get<long>() > a->body["steps"].get<long>());
    CHECK(b->body["frame_index"].get<long>() == a->body["frame_index"].get<long>() + 1);
    CHECK(a->body["image"] == b->body["image"]);
    const Image img = render::decode_png(base64_decode(a->body["image"].get<std::string>()));
    CHECK(img.width == 64);
  }

  SUBCASE("drag on background") {
    const Envelope e = one(s.handle(msg("drag_start", {{"x", 1.0}, {"y", 1.0}})));
    CHECK(e.kind == "error");
    CHECK(e.body["message"] == "no tissue under cursor");
    CHECK(one(s.handle(msg("drag_start", {{"x", -5.0}, {"y", 1.0}}))).body["message"] == "no tissue under cursor");
  }

  SUBCASE("drag semantics") {
    const Envelope started = one(s.handle(msg("drag_start", {{"x", 32.0}, {"y", 32.0}, {"radius", 0.1}}), 0.0));
    REQUIRE(started.kind == "drag_started");
    CHECK(started.body["tagged"].get<int>() > 0);
    const int id = started.body["drag_id"];
    // the grab point lies on the top face of the block, under the pixel
    const auto p = started.body["point"];
    CHECK(std::abs(p[0].get<double>()) < 0.03);
    CHECK(std::abs(p[1].get<double>()) < 0.03);

    const Envelope still = one(s.handle(msg("drag_move", {{"drag_id", id}, {"x", 32.0}, {"y", 32.0}}), 0.05));
    CHECK(still.body["velocity"] == json::array({0.0, 0.0, 0.0}));
    CHECK(still.body["interval"].get<double>() == doctest::Approx(0.05));

    const Envelope slow = one(s.handle(msg("drag_move", {{"drag_id", id}, {"x", 40.0}, {"y", 32.0}}), 5.0));
    CHECK(slow.body["interval"].get<double>() == doctest::Approx(0.2));
    // 8 px at the grab depth, image x = world x
    const double depth = 2.5 - p[2].get<double>();
    CHECK(slow.body["velocity"][0].get<double>() == doctest::Approx(8.0 * depth / (1.2 * 64) / 0.2));
    const Envelope fast = one(s.handle(msg("drag_move", {{"drag_id", id}, {"x", 41.0}, {"y", 32.0}}), 5.0001));
    CHECK(fast.body["interval"].get<double>() == doctest::Approx(1.0 / 120.0));

    CHECK(one(s.handle(msg("drag_move", {{"drag_id", 99}, {"x", 1.0}, {"y", 1.0}}))).kind == "error");
    CHECK(one(s.handle(msg("drag_end", {{"drag_id", 99}}))).kind == "error");
    CHECK(one(s.handle(msg("drag_end", {{"drag_id", id}}))).kind == "drag_ended");
    CHECK(one(s.handle(msg("drag_end", {{"drag_id", id}}))).kind == "error");
  }

  SUBCASE("dragging moves tissue and reset restores the snapshot") {
    const int id = one(s.handle(msg("drag_start", {{"x", 32.0}, {"y", 32.0}}), 0.0)).body["drag_id"];
    one(s.handle(msg("drag_move", {{"drag_id", id}, {"x", 38.0}, {"y", 32.0}}), 0.1));
    one(s.handle(msg("set_params", {{"cluster", 1}, {"mu", 800.0}})));
    one(s.handle(msg("start")));
    s.wait_for_steps(200);
    one(s.handle(msg("pause")));
    const Scene moved = s.current_scene();
    CHECK(!(moved == s.initial_scene()));
    double shift = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
      shift = std::max(shift, moved.particles[i].position.x() - s.initial_scene().particles[i].position.x());
    }
    CHECK(shift > 0.005);

    const Envelope r = one(s.handle(msg("reset")));
    CHECK(r.body["reset"] == true);
    CHECK(r.body["steps"] == 0);
    CHECK(s.current_scene() == s.initial_scene());
    CHECK(one(s.handle(msg("drag_move", {{"drag_id", id}, {"x", 1.0}, {"y", 1.0}}))).kind == "error");
  }

  SUBCASE("set_params") {
    const Envelope ok = one(s.handle(msg("set_params", {{"cluster", 0}, {"mu", 2000.0}, {"eta", 3.0}})));
    CHECK(ok.kind == "params");
    CHECK(ok.body["mu"] == 2000.0);
    CHECK(ok.body["lambda"].get<double>() == doctest::Approx(2000.0 * 0.9 / 0.1));
    CHECK(ok.body["gamma"] == 1.0);
    const Scene cur = s.current_scene();
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (cur.material.cluster_id[i] == 0) {
        CHECK(cur.material.mu[i] == 2000.0);
        CHECK(cur.material.eta[i] == 3.0);
      } else {
        CHECK(cur.material.mu[i] == 500.0);
      }
    }
    CHECK(one(s.handle(msg("set_params", {{"cluster", 0}, {"mu", 1e9}}))).kind == "error");
    CHECK(one(s.handle(msg("set_params", {{"cluster", 5}, {"mu", 1e3}}))).kind == "error");
    CHECK(one(s.handle(msg("set_params", {{"mu", 1e3}}))).kind == "error");
    // rejected updates change nothing
    CHECK(s.current_scene().material == cur.material);
  }

  SUBCASE("unknown kind") { CHECK(one(s.handle(msg("explode"))).kind == "error"); }
}

TEST_CASE("sessions on the same scene are isolated") {
  const Scene scene = block(5, 0.06);
  Session a(scene, session_config());
  Session b(scene, session_config());
  const int id = one(a.handle(msg("drag_start", {{"x", 32.0}, {"y", 32.0}}), 0.0)).body["drag_id"];
  one(a.handle(msg("drag_move", {{"drag_id", id}, {"x", 40.0}, {"y", 32.0}}), 0.1));
  one(a.handle(msg("start")));
  a.wait_for_steps(100);
  one(a.handle(msg("pause")));
  CHECK(!(a.current_scene() == a.initial_scene()));
  CHECK(b.current_scene() == b.initial_scene());
  CHECK(b.snapshot()->steps == 0);
}

TEST_CASE("simulation errors pause the session and raise an event") {
  SessionConfig cfg = session_config();
  cfg.sim.dt = 2e-3;
  cfg.sim.frame_dt = 0.04;
  Session s(block(5, 0.06), cfg);
  const int id = one(s.handle(msg("drag_start", {{"x", 32.0}, {"y", 32.0}}), 0.0)).body["drag_id"];
  one(s.handle(msg("drag_move", {{"drag_id", id}, {"x", 63.0}, {"y", 32.0}}), 0.0));
  one(s.handle(msg("start")));
  s.wait_for_steps(1000);
  const auto events = s.take_events();
  REQUIRE(events.size() == 1);
  check_schema(events[0]);
  CHECK(events[0].kind == "error");
  CHECK(events[0].body["source"] == "simulation");
  CHECK(!s.snapshot()->running);
  CHECK(!s.render_frame());
}

namespace {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Client {
  net::io_context ioc;
  websocket::stream<tcp::socket> ws{ioc};

  explicit Client(unsigned short port, const std::string& target = "/session") {
    tcp::resolver resolver(ioc);
    net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", target);
    ws.text(true);
  }
  void send(const Envelope& e) { ws.write(net::buffer(encode(e))); }
  Envelope receive() {
    beast::flat_buffer buf;
    ws.read(buf);
    return decode(beast::buffers_to_string(buf.data()));
  }
  // skips interleaved frame messages
  Envelope reply() {
    for (;;) {
      Envelope e = receive();
      if (e.kind != "frame") return e;
    }
  }
};

struct RunningServer {
  Server server;
  std::thread thread;
  RunningServer(Scene scene, SessionConfig cfg) : server(std::move(scene), std::move(cfg), "127.0.0.1", 0) {
    thread = std::thread([this] { server.run(); });
  }
  ~RunningServer() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_CASE("websocket endpoint") {
  RunningServer rs(block(6, 0.06), session_config());
  const unsigned short port = rs.server.port();
  CHECK(port != 0);

  SUBCASE("session exchange") {
    Client c(port);
    c.send(msg("hello", {{"version", 1}}));
    const Envelope w = c.reply();
    check_schema(w);
    CHECK(w.kind == "welcome");
    c.send(msg("start"));
    CHECK(c.reply().kind == "status");
    int frames = 0;
    long last_index = -1;
    while (frames < 3) {
      const Envelope e = c.receive();
      if (e.kind != "frame") continue;
      check_schema(e);
      CHECK(e.body["frame_index"].get<long>() > last_index);
      last_index = e.body["frame_index"];
      ++frames;
    }
    c.send(msg("drag_start", {{"x", 0.0}, {"y", 0.0}}));
    CHECK(c.reply().body["message"] == "no tissue under cursor");
    c.ws.write(net::buffer(std::string("not an envelope")));
    CHECK(c.reply().kind == "error");
    c.send(msg("pause"));
    CHECK(c.reply().body["running"] == false);
    c.ws.close(websocket::close_code::normal);
  }

  SUBCASE("other paths are refused") { CHECK_THROWS(Client(port, "/other")); }

  SUBCASE("an occupied port is an io error") {
    try {
      Server second(block(3, 0.06), session_config(), "127.0.0.1", port);
      FAIL("bind should fail");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
    }
  }
}

TEST_CASE("16^3 scene streams at least 5 frames per second") {
  SessionConfig cfg = session_config(128);
  cfg.steps_per_batch = 0;
  const Scene scene = block(16, 0.04);
  REQUIRE(scene.size() == 4096);
  RunningServer rs(scene, cfg);
  Client c(rs.server.port());
  c.send(msg("start"));
  CHECK(c.reply().kind == "status");
  // warm up one frame, then count over a fixed window
  while (c.receive().kind != "frame") {
  }
  const auto t0 = std::chrono::steady_clock::now();
  int frames = 0;
  double elapsed = 0.0;
  while (elapsed < 3.0) {
    if (c.receive().kind == "frame") ++frames;
    elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  MESSAGE("frames per second: " << frames / elapsed);
  CHECK(frames / elapsed >= 5.0);
  c.send(msg("pause"));
  c.reply();
}
