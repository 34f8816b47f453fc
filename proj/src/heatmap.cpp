#include "gridlag/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "gridlag/errors.hpp"

namespace gridlag::heatmap {

namespace {

// Anchor colors of the ramp, interpolated linearly.
constexpr std::array<png::Rgb, 5> kStops{{
    {20, 11, 52}, {101, 21, 110}, {188, 55, 84}, {245, 125, 21}, {252, 255, 164}}};

double forward(Scale s, double x) {
    switch (s) {
        case Scale::linear: return x;
        case Scale::sqrt: return std::sqrt(x);
        case Scale::log: return std::log1p(x);
    }
    return x;
}

double inverse(Scale s, double y) {
    switch (s) {
        case Scale::linear: return y;
        case Scale::sqrt: return y * y;
        case Scale::log: return std::expm1(y);
    }
    return y;
}

}  // namespace

Scale parse_scale(std::string_view name) {
    if (name == "linear") return Scale::linear;
    if (name == "sqrt") return Scale::sqrt;
    if (name == "log") return Scale::log;
    throw ConfigError(fmt::format("unknown color scale '{}' (expected linear, sqrt or log)", name));
}

png::Rgb ramp(double t) noexcept {
    if (!(t > 0.0)) t = 0.0;
    t = std::min(t, 1.0);
    const double pos = t * static_cast<double>(kStops.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), kStops.size() - 2);
    const double f = pos - static_cast<double>(i);
    png::Rgb out{};
    for (std::size_t c = 0; c < 3; ++c)
        out[c] = static_cast<std::uint8_t>(
            std::lround((1.0 - f) * kStops[i][c] + f * kStops[i + 1][c]));
    return out;
}

png::RgbImage render(const CountImage& img, Scale scale, double vmax, const mask::ActivityMask* mask) {
    if (mask && !mask->grid.same_shape(img)) throw DataError("mask and frame shapes differ");
    if (vmax <= 0.0) {
        std::uint32_t m = 0;
        for (auto v : img.values()) m = std::max(m, v);
        vmax = m;
    }
    const double top = vmax > 0.0 ? forward(scale, vmax) : 1.0;
    png::RgbImage out(img.rows(), img.cols());
    for (std::size_t r = 0; r < img.rows(); ++r)
        for (std::size_t c = 0; c < img.cols(); ++c) {
            if (mask && !mask->grid(r, c)) {
                out(r, c) = {96, 96, 96};
                continue;
            }
            const auto v = img(r, c);
            out(r, c) = v == 0 ? png::Rgb{0, 0, 0} : ramp(forward(scale, v) / top);
        }
    return out;
}

png::RgbImage render_mask(const mask::ActivityMask& m) {
    png::RgbImage out(m.grid.rows(), m.grid.cols());
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) = m.grid(r, c) ? png::Rgb{255, 255, 255} : png::Rgb{0, 0, 0};
    return out;
}

png::RgbImage upscale(const png::RgbImage& img, std::size_t factor) {
    if (factor < 1) throw ConfigError("zoom factor must be at least 1");
    png::RgbImage out(img.rows() * factor, img.cols() * factor);
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = img(r / factor, c / factor);
    return out;
}

void write_legend_csv(std::ostream& out, Scale scale, double vmax, int steps) {
    if (steps < 2) throw ConfigError("legend needs at least 2 steps");
    out << "level,value,r,g,b\n";
    const double top = vmax > 0.0 ? forward(scale, vmax) : 1.0;
    for (int i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / (steps - 1);
        const auto rgb = ramp(t);
        out << fmt::format("{:.4f},{:.6g},{},{},{}\n", t, inverse(scale, t * top), rgb[0], rgb[1], rgb[2]);
    }
}

}  // namespace gridlag::heatmap
