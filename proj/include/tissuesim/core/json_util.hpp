#pragma once

// Strict JSON reading shared by the config and camera loaders.

#include <filesystem>
#include <set>
#include <string>

#include "json.hpp"
#include "tissuesim/core/types.hpp"

namespace tissuesim::json_util {

[[noreturn]] void fail(const std::string& where, const std::string& what);

/// Reads known keys of one object; on destruction rejects keys never asked
/// for, so typos surface as validation errors.
class Section {
 public:
  Section(const nlohmann::json& j, std::string where);
  ~Section() noexcept(false);

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(path(key), "wrong type");
    }
  }

  const nlohmann::json* child(const char* key);
  std::string path(const char* key) const { return where_ + "." + key; }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Vec3 vec3_from(const nlohmann::json& j, const std::string& where);
nlohmann::json vec3_json(const Vec3& v);

nlohmann::json read_file(const std::filesystem::path& path);
void write_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace tissuesim::json_util
