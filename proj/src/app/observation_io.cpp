#include "tissuesim/app/observation_io.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>

#include "tissuesim/app/run_config.hpp"
#include "tissuesim/core/error.hpp"
#include "tissuesim/render/image_io.hpp"

namespace tissuesim::app {

std::string frame_file_name(int frame, const char* prefix, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d", frame);
  return std::string(prefix) + buf + ext;
}

ObservationSet load_observations(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::io, "file not found: " + dir.string());
  ObservationSet set;
  set.camera = load_camera(dir / "camera.json");

  static const std::regex frame_re(R"(frame_(\d+)\.png)");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, frame_re)) continue;
    ObservedFrame f;
    f.frame_index = std::stoi(m[1]);
    f.image = render::read_png(entry.path());
    const auto mask_path = dir / frame_file_name(f.frame_index, "mask_");
    f.mask = std::filesystem::exists(mask_path) ? render::read_mask_png(mask_path)
                                                : Mask(f.image.width, f.image.height);
    set.frames.push_back(std::move(f));
  }
  if (set.frames.empty()) throw Error(ErrorKind::validation, dir.string() + ": no frame_NNNN.png files");
  std::sort(set.frames.begin(), set.frames.end(),
            [](const ObservedFrame& a, const ObservedFrame& b) { return a.frame_index < b.frame_index; });
  for (std::size_t i = 1; i < set.frames.size(); ++i) {
    if (set.frames[i].frame_index == set.frames[i - 1].frame_index) {
      throw Error(ErrorKind::validation, dir.string() + ": frame " + std::to_string(set.frames[i].frame_index) +
                                             " appears twice");
    }
  }
  set.validate();
  return set;
}

void save_observations(const ObservationSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_camera(set.camera, dir / "camera.json");
  for (const auto& f : set.frames) {
    render::write_png(f.image, dir / frame_file_name(f.frame_index));
    if (f.mask.count() != f.mask.data.size()) render::write_mask_png(f.mask, dir / frame_file_name(f.frame_index, "mask_"));
  }
}

}  // namespace tissuesim::app
