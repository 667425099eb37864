#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace tissuesim::service {

inline constexpr int kProtocolVersion = 1;

/// One message: "<kind> <byte length of body>\n<body>", the body being a JSON
/// object. Every websocket text message carries exactly one envelope.
struct Envelope {
  std::string kind;
  nlohmann::json body = nlohmann::json::object();
};

std::string encode(const Envelope& e);

/// Throws ErrorKind::protocol on a bad header, a length mismatch, invalid
/// JSON or a non-object body.
Envelope decode(std::string_view raw);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace tissuesim::service
