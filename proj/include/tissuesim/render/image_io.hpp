#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tissuesim/core/image.hpp"

namespace tissuesim::render {

/// 8-bit quantization used for every PNG: round(clamp(v, 0, 1) * 255).
std::uint8_t quantize(float v);

/// PNG encoding of a 1- or 3-channel image (gray or RGB, 8 bits per channel).
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& path);

/// Decodes any 8-bit PNG to a 3-channel float image in [0, 1]; gray is
/// replicated and alpha dropped.
Image read_png(const std::filesystem::path& path);
Image decode_png(const std::vector<std::uint8_t>& bytes);

/// Mask from a PNG: a pixel is set when its first channel is nonzero.
Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const Mask& mask, const std::filesystem::path& path);

/// Raw little-endian float32 array, row-major with interleaved channels and
/// no header; the reader needs the shape.
void write_raw(const Image& image, const std::filesystem::path& path);
Image read_raw(const std::filesystem::path& path, int width, int height, int channels);

}  // namespace tissuesim::render
