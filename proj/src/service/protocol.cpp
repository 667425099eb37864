#include "tissuesim/service/protocol.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <charconv>

#include "tissuesim/core/error.hpp"

namespace tissuesim::service {

namespace it = boost::archive::iterators;

std::string encode(const Envelope& e) {
  const std::string body = e.body.dump();
  return e.kind + ' ' + std::to_string(body.size()) + '\n' + body;
}

Envelope decode(std::string_view raw) {
  const auto nl = raw.find('\n');
  const auto sp = raw.find(' ');
  if (nl == std::string_view::npos || sp == std::string_view::npos || sp == 0 || sp > nl) {
    throw Error(ErrorKind::protocol, "malformed envelope header");
  }
  Envelope e;
  e.kind = std::string(raw.substr(0, sp));
  std::size_t len = 0;
  const auto digits = raw.substr(sp + 1, nl - sp - 1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    throw Error(ErrorKind::protocol, "malformed envelope length");
  }
  const auto body = raw.substr(nl + 1);
  if (body.size() != len) {
    throw Error(ErrorKind::protocol, "envelope length " + std::to_string(len) + " does not match body size " +
                                         std::to_string(body.size()));
  }
  try {
    e.body = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorKind::protocol, "envelope body is not valid JSON");
  }
  if (!e.body.is_object()) throw Error(ErrorKind::protocol, "envelope body must be a JSON object");
  return e;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  using enc = it::base64_from_binary<it::transform_width<std::vector<std::uint8_t>::const_iterator, 6, 8>>;
  std::string out(enc(bytes.begin()), enc(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  while (!text.empty() && text.back() == '=') text.remove_suffix(1);
  using dec = it::transform_width<it::binary_from_base64<std::string_view::const_iterator>, 8, 6>;
  try {
    std::vector<std::uint8_t> out(dec(text.begin()), dec(text.end()));
    // the trailing partial group decodes to bits that are not data
    out.resize(text.size() * 3 / 4);
    return out;
  } catch (const std::exception&) {
    throw Error(ErrorKind::protocol, "invalid base64");
  }
}

}  // namespace tissuesim::service
