#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace tissuesim {

enum class ErrorKind {
  domain,            // argument outside the mathematical domain of an operation
  validation,        // malformed configuration or scene
  parse,             // unreadable file content
  io,                // missing file, write failure
  stencil_clipped,   // particle stencil leaves the grid
  inverted_element,  // det(F) <= 0
  cfl_violation,     // dt * max|v| >= dx
  unstable_step,     // dt * |grad v| too large for the explicit update
  non_finite,        // NaN / inf in particle state
  empty_region,      // drive region selected no particles
  protocol,          // service message errors
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library. Simulation errors carry the
/// offending particle index (and step, when raised inside a run).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> particle = std::nullopt)
      : std::runtime_error(message), kind_(kind), particle_(particle) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> particle() const noexcept { return particle_; }
  std::optional<long> step() const noexcept { return step_; }

  Error with_step(long step) const {
    Error e(kind_, std::string(what()) + " (step " + std::to_string(step) + ")", particle_);
    e.step_ = step;
    return e;
  }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> particle_;
  std::optional<long> step_;
};

}  // namespace tissuesim
