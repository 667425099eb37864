#include "tissuesim/core/camera_json.hpp"

#include "tissuesim/core/error.hpp"
#include "tissuesim/core/json_util.hpp"

namespace tissuesim {

using nlohmann::json;
using json_util::Section;

Camera camera_from_json(const json& j) {
  Camera c;
  {
    Section s(j, "camera");
    s.get("fx", c.fx);
    s.get("fy", c.fy);
    s.get("cx", c.cx);
    s.get("cy", c.cy);
    s.get("width", c.width);
    s.get("height", c.height);
    s.get("near", c.near_plane);
    if (const json* r = s.child("rotation")) {
      if (!r->is_array() || r->size() != 3) json_util::fail(s.path("rotation"), "expected three rows");
      for (int i = 0; i < 3; ++i) c.rotation.row(i) = json_util::vec3_from((*r)[i], s.path("rotation")).transpose();
    }
    if (const json* t = s.child("translation")) c.translation = json_util::vec3_from(*t, s.path("translation"));
  }
  c.validate();
  return c;
}

json camera_to_json(const Camera& c) {
  json rot = json::array();
  for (int i = 0; i < 3; ++i) rot.push_back(json_util::vec3_json(c.rotation.row(i).transpose()));
  return {{"fx", c.fx},
          {"fy", c.fy},
          {"cx", c.cx},
          {"cy", c.cy},
          {"width", c.width},
          {"height", c.height},
          {"near", c.near_plane},
          {"rotation", rot},
          {"translation", json_util::vec3_json(c.translation)}};
}

Camera load_camera(const std::filesystem::path& path) {
  try {
    return camera_from_json(json_util::read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void save_camera(const Camera& camera, const std::filesystem::path& path) {
  json_util::write_file(camera_to_json(camera), path);
}

}  // namespace tissuesim
