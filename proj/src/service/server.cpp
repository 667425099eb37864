#include "tissuesim/service/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>

#include "tissuesim/core/error.hpp"

namespace tissuesim::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

// Frames are dropped rather than queued behind a slow client.
constexpr std::size_t kMaxQueuedFrames = 2;

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const Scene& scene, const SessionConfig& config)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), scene_(scene), config_(config) {}

  void start() {
    http::async_read(ws_.next_layer(), buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_request(ec); });
  }

 private:
  void on_request(beast::error_code ec) {
    if (ec) return;
    if (!websocket::is_upgrade(request_) || request_.target() != "/session") {
      auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found, request_.version());
      res->set(http::field::content_type, "text/plain");
      res->body() = "websocket endpoint is /session\n";
      res->prepare_payload();
      res->keep_alive(false);
      http::async_write(ws_.next_layer(), *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
        beast::error_code ignored;
        self->ws_.next_layer().socket().shutdown(tcp::socket::shutdown_send, ignored);
      });
      return;
    }
    ws_.async_accept(request_, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    try {
      session_ = std::make_unique<Session>(scene_, config_);
    } catch (const Error& e) {
      send(encode({"error", {{"message", e.what()}}}));
      return;
    }
    ws_.text(true);
    period_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / config_.fps));
    next_frame_ = std::chrono::steady_clock::now() + period_;
    schedule_frame();
    read();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      timer_.cancel();
      return;
    }
    const std::string raw = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (auto& r : session_->handle_raw(raw)) send(std::move(r));
    flush_events();
    read();
  }

  void schedule_frame() {
    timer_.expires_at(next_frame_);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) { self->on_frame(ec); });
  }

  void on_frame(beast::error_code ec) {
    if (ec || closed_) return;
    // fixed cadence; skip missed ticks instead of bursting
    const auto now = std::chrono::steady_clock::now();
    next_frame_ += period_;
    if (next_frame_ < now) next_frame_ = now + period_;
    flush_events();
    if (queued_frames_ < kMaxQueuedFrames) {
      if (auto f = session_->render_frame()) {
        ++queued_frames_;
        send(encode(*f), true);
      }
    }
    schedule_frame();
  }

  void flush_events() {
    for (const auto& e : session_->take_events()) send(encode(e));
  }

  void send(std::string msg, bool frame = false) {
    outbox_.push_back({std::move(msg), frame});
    if (outbox_.size() == 1) write();
  }

  void write() {
    ws_.async_write(net::buffer(outbox_.front().text),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    if (outbox_.front().frame) --queued_frames_;
    outbox_.pop_front();
    if (ec) {
      closed_ = true;
      timer_.cancel();
      return;
    }
    if (!outbox_.empty()) write();
  }

  struct Outgoing {
    std::string text;
    bool frame = false;
  };

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  net::steady_timer timer_;
  const Scene& scene_;
  const SessionConfig& config_;
  std::unique_ptr<Session> session_;
  std::deque<Outgoing> outbox_;
  std::size_t queued_frames_ = 0;
  std::chrono::steady_clock::duration period_{};
  std::chrono::steady_clock::time_point next_frame_{};
  bool closed_ = false;
};

}  // namespace

struct Server::Impl {
  Scene scene;
  SessionConfig config;
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), scene, config)->start();
      accept();
    });
  }
};

Server::Server(Scene scene, SessionConfig config, const std::string& host, unsigned short port)
    : impl_(std::make_unique<Impl>()) {
  impl_->scene = std::move(scene);
  impl_->config = std::move(config);
  try {
    const tcp::endpoint ep(net::ip::make_address(host), port);
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(net::socket_base::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorKind::io, "cannot listen on " + host + ":" + std::to_string(port) + ": " + e.code().message());
  }
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run(std::optional<double> seconds) {
  net::steady_timer deadline(impl_->ioc);
  if (seconds) {
    deadline.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(*seconds)));
    deadline.async_wait([this](beast::error_code ec) {
      if (!ec) stop();
    });
  }
  impl_->accept();
  impl_->ioc.run();
}

void Server::stop() { impl_->ioc.stop(); }

}  // namespace tissuesim::service
