#pragma once

#include <memory>
#include <optional>
#include <string>

#include "tissuesim/core/particle.hpp"
#include "tissuesim/service/session.hpp"

namespace tissuesim::service {

/// Websocket host. Each connection to /session gets its own Session on a copy
/// of the scene; frames are pushed at config.fps while the session runs.
class Server {
 public:
  /// Binds and listens immediately. Port 0 picks a free port. Throws
  /// ErrorKind::io when the address is unavailable.
  Server(Scene scene, SessionConfig config, const std::string& host, unsigned short port);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;

  /// Serves until stop() or until `seconds` have passed.
  void run(std::optional<double> seconds = std::nullopt);
  /// Safe to call from any thread.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tissuesim::service
