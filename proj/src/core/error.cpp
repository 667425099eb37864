#include "tissuesim/core/error.hpp"

namespace tissuesim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::stencil_clipped: return "stencil_clipped";
    case ErrorKind::inverted_element: return "inverted_element";
    case ErrorKind::cfl_violation: return "cfl_violation";
    case ErrorKind::unstable_step: return "unstable_step";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::empty_region: return "empty_region";
    case ErrorKind::protocol: return "protocol";
  }
  return "unknown";
}

}  // namespace tissuesim
