#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lesionkit/image.hpp"

namespace lesionkit::codec {

/// Decodes JPEG or PNG bytes. Inputs carrying an alpha channel are rejected
/// with InvalidInput; 16-bit inputs are rejected as well.
RasterImage decode(std::span<const std::uint8_t> bytes);
RasterImage read_image(const std::filesystem::path& path);

/// Lossless PNG; 1 or 3 channels.
std::vector<std::uint8_t> encode_png(const RasterImage& img);
/// 1-channel PNG, black = 0 and white = 255.
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& mask);
/// 16-bit 1-channel PNG of values in [0,1] scaled to [0, 65535].
std::vector<std::uint8_t> encode_plane_png16(const FloatPlane& plane);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

std::span<const std::uint8_t> as_bytes(const std::string& s);

}  // namespace lesionkit::codec
