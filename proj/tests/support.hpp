#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "gridlag/image.hpp"
#include "gridlag/raster.hpp"

namespace testing {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("gridlag_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline gridlag::CountImage random_image(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                        std::uint32_t max_value, double zero_prob = 0.3) {
    gridlag::CountImage img(rows, cols);
    std::uniform_int_distribution<std::uint32_t> value(0, max_value);
    std::bernoulli_distribution zero(zero_prob);
    for (auto& v : img.values()) v = zero(rng) ? 0 : value(rng);
    return img;
}

/// A store of `days` days on a rows x cols grid filled by `fill(hour, frame)`.
template <class Fill>
gridlag::raster::FrameStore make_store(std::size_t rows, std::size_t cols, int days, Fill&& fill) {
    gridlag::raster::GridSpec g;
    g.rows = rows;
    g.cols = cols;
    gridlag::DayRange range{gridlag::make_day(2019, 1, 1), days};
    gridlag::raster::FrameStore store(g, range);
    for (std::size_t h = 0; h < store.size(); ++h) fill(static_cast<std::int64_t>(h), store[h]);
    return store;
}

}  // namespace testing
