#include "tissuesim/geometry/bundle.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "tissuesim/core/error.hpp"
#include "tissuesim/scene/knn.hpp"

namespace tissuesim::geometry {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  return out;
}

template <typename T>
T parse_number(const std::string& s, int line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::parse, "bundle line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

TrajectoryBundle TrajectoryBundle::zeros(std::size_t frames, std::size_t points) {
  TrajectoryBundle b;
  b.frames = frames;
  b.points = points;
  b.xyz.assign(frames * points, Vec3::Zero());
  return b;
}

void TrajectoryBundle::compute_neighbors(std::size_t k) {
  neighbors.assign(points, {});
  if (points < 2 || frames == 0 || k == 0) return;
  std::vector<Vec3> first(xyz.begin(), xyz.begin() + static_cast<std::ptrdiff_t>(points));
  neighbors = scene::knn(first, std::min(k, points - 1));
}

TrajectoryBundle read_bundle(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::parse, "bundle: missing header");
  const auto header = split_fields(line);
  if (header != std::vector<std::string>{"frame", "point_id", "x", "y", "z"}) {
    throw Error(ErrorKind::parse, "bundle: header must be 'frame,point_id,x,y,z'");
  }
  std::map<std::pair<long, long>, Vec3> rows;
  long max_frame = -1, max_point = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) throw Error(ErrorKind::parse, "bundle line " + std::to_string(line_no) + ": expected 5 fields");
    const long t = parse_number<long>(f[0], line_no);
    const long i = parse_number<long>(f[1], line_no);
    if (t < 0 || i < 0) throw Error(ErrorKind::parse, "bundle line " + std::to_string(line_no) + ": negative index");
    const Vec3 p(parse_number<double>(f[2], line_no), parse_number<double>(f[3], line_no),
                 parse_number<double>(f[4], line_no));
    if (!rows.emplace(std::make_pair(t, i), p).second) {
      throw Error(ErrorKind::parse, "bundle line " + std::to_string(line_no) + ": duplicate (frame, point)");
    }
    max_frame = std::max(max_frame, t);
    max_point = std::max(max_point, i);
  }
  if (rows.empty()) throw Error(ErrorKind::parse, "bundle: no rows");
  TrajectoryBundle b = TrajectoryBundle::zeros(max_frame + 1, max_point + 1);
  if (rows.size() != b.xyz.size()) {
    throw Error(ErrorKind::parse, "bundle: expected every point in every frame (" + std::to_string(b.xyz.size()) +
                                      " rows), got " + std::to_string(rows.size()));
  }
  for (const auto& [key, p] : rows) b.at(key.first, key.second) = p;
  return b;
}

TrajectoryBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "file not found: " + path.string());
  return read_bundle(in);
}

void write_bundle(const TrajectoryBundle& b, std::ostream& out) {
  out << "frame,point_id,x,y,z\n";
  for (std::size_t t = 0; t < b.frames; ++t) {
    for (std::size_t i = 0; i < b.points; ++i) {
      const Vec3& p = b.at(t, i);
      out << t << ',' << i << ',' << format_double(p.x()) << ',' << format_double(p.y()) << ','
          << format_double(p.z()) << '\n';
    }
  }
}

void save_bundle(const TrajectoryBundle& b, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  write_bundle(b, out);
}

}  // namespace tissuesim::geometry
