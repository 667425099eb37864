#include "tissuesim/render/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <string>
#include <fstream>
#include <iterator>

#include "tissuesim/core/error.hpp"

namespace tissuesim::render {

namespace {

// libpng reports errors by longjmp; the message is stashed here first.
void png_fail(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

struct ReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->offset + n > cur->bytes->size()) png_error(png, "truncated data");
  std::memcpy(out, cur->bytes->data() + cur->offset, n);
  cur->offset += n;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void flush_noop(png_structp) {}

std::vector<std::uint8_t> encode_rows(int width, int height, int channels, const std::vector<std::uint8_t>& pixels) {
  std::vector<std::uint8_t> out;
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "png: " + message);
  }
  {
    png_set_write_fn(png, &out, write_to_memory, flush_noop);
    png_set_IHDR(png, info, width, height, 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width * channels);
    }
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

// Decodes to 8-bit gray or RGB rows; returns channel count 1 or 3.
int decode_rows(const std::vector<std::uint8_t>& bytes, int& width, int& height, std::vector<std::uint8_t>& pixels) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error(ErrorKind::parse, "not a PNG file");
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_fail, png_warn);
  png_infop info = png_create_info_struct(png);
  ReadCursor cur{&bytes, 0};
  int channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::parse, "png: " + message);
  }
  {
    png_set_read_fn(png, &cur, read_from_memory);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    channels = png_get_channels(png, info);
    pixels.resize(static_cast<std::size_t>(width) * height * channels);
    for (int y = 0; y < height; ++y) {
      png_read_row(png, pixels.data() + static_cast<std::size_t>(y) * width * channels, nullptr);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return channels;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "file not found: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed: " + path.string());
}

}  // namespace

std::uint8_t quantize(float v) {
  const float c = std::clamp(std::isnan(v) ? 0.0f : v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorKind::validation, "encode_png: 1 or 3 channels required");
  }
  std::vector<std::uint8_t> px(image.data.size());
  std::transform(image.data.begin(), image.data.end(), px.begin(), quantize);
  return encode_rows(image.width, image.height, image.channels, px);
}

void write_png(const Image& image, const std::filesystem::path& path) { write_file(path, encode_png(image)); }

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  int w = 0, h = 0;
  std::vector<std::uint8_t> px;
  const int ch = decode_rows(bytes, w, h, px);
  Image img(w, h, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) img.data[i * 3 + c] = px[i * ch + (ch == 1 ? 0 : c)] / 255.0f;
  }
  return img;
}

Image read_png(const std::filesystem::path& path) {
  try {
    return decode_png(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io && std::string(e.what()).rfind("file not found", 0) == 0) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

Mask read_mask_png(const std::filesystem::path& path) {
  int w = 0, h = 0;
  std::vector<std::uint8_t> px;
  const int ch = decode_rows(read_file(path), w, h, px);
  Mask m(w, h, false);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = px[i * ch] != 0 ? 1 : 0;
  return m;
}

void write_mask_png(const Mask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> px(mask.data.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.data[i] ? 255 : 0;
  write_file(path, encode_rows(mask.width, mask.height, 1, px));
}

void write_raw(const Image& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(image.data.size() * 4);
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const std::uint32_t v = std::bit_cast<std::uint32_t>(image.data[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  write_file(path, bytes);
}

Image read_raw(const std::filesystem::path& path, int width, int height, int channels) {
  const auto bytes = read_file(path);
  Image img(width, height, channels);
  if (bytes.size() != img.data.size() * 4) {
    throw Error(ErrorKind::parse, path.string() + ": raw size does not match " + std::to_string(width) + "x" +
                                      std::to_string(height) + "x" + std::to_string(channels));
  }
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    std::uint32_t v = 0;
    for (int b = 3; b >= 0; --b) v = (v << 8) | bytes[i * 4 + b];
    img.data[i] = std::bit_cast<float>(v);
  }
  return img;
}

}  // namespace tissuesim::render
