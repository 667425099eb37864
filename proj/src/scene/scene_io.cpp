#include "tissuesim/scene/scene_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tissuesim/core/error.hpp"

namespace tissuesim::scene {

namespace {

constexpr int kRecordFloats = 14;

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void put_f32(std::ostream& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

double get_f32(const unsigned char* b) { return std::bit_cast<float>(get_u32(b)); }

Scene finish(std::vector<Particle> particles) {
  Scene s;
  s.particles = std::move(particles);
  s.material = MaterialField::uniform(s.particles.size(), {});
  return s;
}

// ---- PLY -------------------------------------------------------------------

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType parse_ply_type(const std::string& t) {
  static const std::map<std::string, PlyType> types = {
      {"char", PlyType::i8},    {"int8", PlyType::i8},     {"uchar", PlyType::u8},   {"uint8", PlyType::u8},
      {"short", PlyType::i16},  {"int16", PlyType::i16},   {"ushort", PlyType::u16}, {"uint16", PlyType::u16},
      {"int", PlyType::i32},    {"int32", PlyType::i32},   {"uint", PlyType::u32},   {"uint32", PlyType::u32},
      {"float", PlyType::f32},  {"float32", PlyType::f32}, {"double", PlyType::f64}, {"float64", PlyType::f64}};
  auto it = types.find(t);
  if (it == types.end()) throw Error(ErrorKind::parse, "ply: unknown property type '" + t + "'");
  return it->second;
}

int type_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8:
      return 1;
    case PlyType::i16:
    case PlyType::u16:
      return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32:
      return 4;
    case PlyType::f64:
      return 8;
  }
  return 0;
}

double read_binary_le(const unsigned char* b, PlyType t) {
  switch (t) {
    case PlyType::i8:
      return static_cast<std::int8_t>(b[0]);
    case PlyType::u8:
      return b[0];
    case PlyType::i16:
      return static_cast<std::int16_t>(std::uint16_t(b[0]) | (std::uint16_t(b[1]) << 8));
    case PlyType::u16:
      return std::uint16_t(b[0]) | (std::uint16_t(b[1]) << 8);
    case PlyType::i32:
      return static_cast<std::int32_t>(get_u32(b));
    case PlyType::u32:
      return get_u32(b);
    case PlyType::f32:
      return get_f32(b);
    case PlyType::f64: {
      std::uint64_t v = 0;
      for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
      return std::bit_cast<double>(v);
    }
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// SH band-0 constant: color = 0.5 + C0 * f_dc.
constexpr double kShC0 = 0.28209479177387814;

}  // namespace

Scene read_scene(std::istream& in) {
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.empty()) throw Error(ErrorKind::parse, "empty scene");
  if (data.size() < 16) throw Error(ErrorKind::parse, "scene header truncated");
  if (std::memcmp(data.data(), kSceneMagic, 8) != 0) throw Error(ErrorKind::parse, "bad scene magic");
  const std::uint32_t version = get_u32(data.data() + 8);
  if (version != kSceneVersion) {
    throw Error(ErrorKind::parse, "unsupported scene version " + std::to_string(version));
  }
  // a zero count is a valid empty scene; only a zero-byte file is an error
  const std::uint32_t count = get_u32(data.data() + 12);
  const std::size_t record = kRecordFloats * 4;
  const std::size_t available = (data.size() - 16) / record;
  if (available < count) {
    throw Error(ErrorKind::parse, "record " + std::to_string(available) + " of " + std::to_string(count) +
                                      " truncated");
  }
  if (data.size() != 16 + count * record) throw Error(ErrorKind::parse, "trailing bytes after last record");

  std::vector<Particle> particles(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const unsigned char* r = data.data() + 16 + i * record;
    double f[kRecordFloats];
    for (int k = 0; k < kRecordFloats; ++k) f[k] = get_f32(r + 4 * k);
    Particle& p = particles[i];
    p.position = Vec3(f[0], f[1], f[2]);
    p.rotation = Quat(f[3], f[4], f[5], f[6]);
    p.scale = Vec3(f[7], f[8], f[9]);
    p.opacity = f[10];
    p.color = Vec3(f[11], f[12], f[13]);
  }
  return finish(std::move(particles));
}

void write_scene(const Scene& scene, std::ostream& out) {
  out.write(kSceneMagic, 8);
  put_u32(out, kSceneVersion);
  put_u32(out, static_cast<std::uint32_t>(scene.particles.size()));
  for (const auto& p : scene.particles) {
    for (int d = 0; d < 3; ++d) put_f32(out, p.position[d]);
    put_f32(out, p.rotation.w());
    put_f32(out, p.rotation.x());
    put_f32(out, p.rotation.y());
    put_f32(out, p.rotation.z());
    for (int d = 0; d < 3; ++d) put_f32(out, p.scale[d]);
    put_f32(out, p.opacity);
    for (int d = 0; d < 3; ++d) put_f32(out, p.color[d]);
  }
}

Scene read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw Error(ErrorKind::parse, "ply: missing magic");
  std::string format;
  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false;
  std::vector<PlyProperty> props;
  int line_no = 1;
  for (;;) {
    if (!std::getline(in, line)) throw Error(ErrorKind::parse, "ply: header not terminated");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") break;
    if (word == "format") {
      ls >> format;
    } else if (word == "element") {
      std::string name;
      std::size_t n = 0;
      ls >> name >> n;
      if (name == "vertex") {
        if (seen_vertex) throw Error(ErrorKind::parse, "ply: duplicate vertex element");
        in_vertex = seen_vertex = true;
        vertex_count = n;
      } else {
        if (!seen_vertex && n > 0) {
          throw Error(ErrorKind::parse, "ply line " + std::to_string(line_no) + ": element '" + name +
                                            "' precedes vertex data");
        }
        in_vertex = false;
      }
    } else if (word == "property" && in_vertex) {
      std::string type, name;
      ls >> type;
      if (type == "list") throw Error(ErrorKind::parse, "ply: list property in vertex element");
      ls >> name;
      props.push_back({name, parse_ply_type(type)});
    }
  }
  if (format != "ascii" && format != "binary_little_endian") {
    throw Error(ErrorKind::parse, "ply: unsupported format '" + format + "'");
  }
  if (vertex_count == 0) throw Error(ErrorKind::parse, "empty scene");

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < props.size(); ++i) col[props[i].name] = i;
  for (const char* axis : {"x", "y", "z"}) {
    if (!col.count(axis)) throw Error(ErrorKind::parse, std::string("ply: missing property ") + axis);
  }
  auto has = [&](const char* n) { return col.count(n) > 0; };

  std::vector<double> row(props.size());
  std::vector<unsigned char> buf;
  std::size_t row_bytes = 0;
  for (const auto& p : props) row_bytes += type_size(p.type);
  buf.resize(row_bytes);

  std::vector<Particle> particles(vertex_count);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (format == "ascii") {
      if (!std::getline(in, line)) {
        throw Error(ErrorKind::parse, "ply: vertex " + std::to_string(v) + " missing");
      }
      std::istringstream ls(line);
      for (std::size_t k = 0; k < props.size(); ++k) {
        if (!(ls >> row[k])) {
          throw Error(ErrorKind::parse, "ply line " + std::to_string(line_no + 1 + v) + ": expected " +
                                            std::to_string(props.size()) + " values");
        }
      }
    } else {
      if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(row_bytes))) {
        throw Error(ErrorKind::parse, "ply: vertex record " + std::to_string(v) + " truncated");
      }
      std::size_t off = 0;
      for (std::size_t k = 0; k < props.size(); ++k) {
        row[k] = read_binary_le(buf.data() + off, props[k].type);
        off += type_size(props[k].type);
      }
    }
    auto get = [&](const char* n) { return row[col.at(n)]; };
    Particle& p = particles[v];
    p.position = Vec3(get("x"), get("y"), get("z"));
    if (has("f_dc_0") && has("f_dc_1") && has("f_dc_2")) {
      for (int c = 0; c < 3; ++c) {
        const double dc = row[col.at("f_dc_" + std::to_string(c))];
        p.color[c] = std::clamp(0.5 + kShC0 * dc, 0.0, 1.0);
      }
    } else if (has("red") && has("green") && has("blue")) {
      const bool bytes = props[col.at("red")].type == PlyType::u8;
      p.color = Vec3(get("red"), get("green"), get("blue"));
      if (bytes) p.color /= 255.0;
    }
    // 3DGS exports store opacity as a logit and scales as logs.
    if (has("opacity")) p.opacity = sigmoid(get("opacity"));
    if (has("scale_0") && has("scale_1") && has("scale_2")) {
      p.scale = Vec3(std::exp(get("scale_0")), std::exp(get("scale_1")), std::exp(get("scale_2")));
    }
    if (has("rot_0") && has("rot_1") && has("rot_2") && has("rot_3")) {
      Quat q(get("rot_0"), get("rot_1"), get("rot_2"), get("rot_3"));
      if (q.norm() > 0.0) p.rotation = q.normalized();
    }
  }
  return finish(std::move(particles));
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "file not found: " + path.string());
  char head[3] = {0, 0, 0};
  in.read(head, 3);
  in.clear();
  in.seekg(0);
  try {
    if (std::string(head, 3) == "ply") return read_ply(in);
    return read_scene(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void save_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  write_scene(scene, out);
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

}  // namespace tissuesim::scene
