#include "tissuesim/core/json_util.hpp"

#include <exception>
#include <fstream>

#include "tissuesim/core/error.hpp"

namespace tissuesim::json_util {

using nlohmann::json;

void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::validation, where + ": " + what);
}

Section::Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
  if (!j_.is_object()) fail(where_, "expected an object");
}

Section::~Section() noexcept(false) {
  if (std::uncaught_exceptions() > 0) return;
  for (const auto& [key, _] : j_.items()) {
    if (!seen_.count(key)) fail(where_, "unknown key '" + key + "'");
  }
}

const json* Section::child(const char* key) {
  seen_.insert(key);
  return j_.contains(key) ? &j_.at(key) : nullptr;
}

Vec3 vec3_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
    fail(where, "expected [x, y, z]");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "file not found: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
}

void write_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace tissuesim::json_util
