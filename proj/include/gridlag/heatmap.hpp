#pragma once

#include <cstdint>
#include <ostream>
#include <string_view>

#include "gridlag/image.hpp"
#include "gridlag/mask.hpp"
#include "gridlag/png_io.hpp"

namespace gridlag::heatmap {

enum class Scale { linear, sqrt, log };

[[nodiscard]] Scale parse_scale(std::string_view name);

/// Maps a value in [0, 1] onto a dark-to-bright sequential ramp.
[[nodiscard]] png::Rgb ramp(double t) noexcept;

/// Colors each pixel by value / vmax under the chosen scale. vmax <= 0 uses
/// the image maximum. Zero pixels are drawn black; cells outside `mask`
/// (when given) are drawn mid grey.
[[nodiscard]] png::RgbImage render(const CountImage& img, Scale scale = Scale::sqrt, double vmax = 0.0,
                                   const mask::ActivityMask* mask = nullptr);

/// Active cells white, inactive black.
[[nodiscard]] png::RgbImage render_mask(const mask::ActivityMask& m);

/// Nearest-neighbour enlargement by an integer factor.
[[nodiscard]] png::RgbImage upscale(const png::RgbImage& img, std::size_t factor);

/// "level,value,r,g,b" rows for `steps` evenly spaced levels.
void write_legend_csv(std::ostream& out, Scale scale, double vmax, int steps = 11);

}  // namespace gridlag::heatmap
