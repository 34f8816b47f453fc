#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gridlag/image.hpp"

namespace gridlag::png {

using Rgb = std::array<std::uint8_t, 3>;
using RgbImage = Image<Rgb>;

/// 16-bit grayscale, non-interlaced PNG without timestamp chunks, so equal
/// images always encode to identical bytes. Throws DataError when a pixel
/// exceeds 65535 (nothing is written in that case).
[[nodiscard]] std::vector<std::uint8_t> encode_gray16(const CountImage& img);

/// Decodes 1/2/4/8/16-bit grayscale PNGs. Throws DataError on corrupt input
/// or a non-grayscale color type.
[[nodiscard]] CountImage decode_gray16(std::span<const std::uint8_t> bytes);

void write_gray16(const std::filesystem::path& path, const CountImage& img);
[[nodiscard]] CountImage read_gray16(const std::filesystem::path& path);

/// 8-bit RGB PNG for visualizations.
[[nodiscard]] std::vector<std::uint8_t> encode_rgb8(const RgbImage& img);
void write_rgb8(const std::filesystem::path& path, const RgbImage& img);

/// Whole-file helpers shared by the PNG and archive code.
[[nodiscard]] std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace gridlag::png
