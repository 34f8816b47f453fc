#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "gridlag/image.hpp"
#include "gridlag/raster.hpp"

namespace gridlag::mask {

/// Global binary activity mask and its active support, listed row-major.
struct ActivityMask {
    Image<std::uint8_t> grid;        // 1 = active
    std::vector<raster::Cell> omega;  // active cells, row-major

    [[nodiscard]] std::size_t active_count() const noexcept { return omega.size(); }
    [[nodiscard]] std::size_t rows() const noexcept { return grid.rows(); }
    [[nodiscard]] std::size_t cols() const noexcept { return grid.cols(); }
    /// Row-major flat index of every active cell.
    [[nodiscard]] std::vector<std::size_t> flat_indices() const;

    friend bool operator==(const ActivityMask&, const ActivityMask&) = default;
};

/// Derives the active set from a 0/1 (or any count) grid: nonzero = active.
template <class T>
[[nodiscard]] ActivityMask from_activity(const Image<T>& activity) {
    ActivityMask m{Image<std::uint8_t>(activity.rows(), activity.cols()), {}};
    for (std::size_t r = 0; r < activity.rows(); ++r)
        for (std::size_t c = 0; c < activity.cols(); ++c)
            if (activity(r, c) != T{}) {
                m.grid(r, c) = 1;
                m.omega.push_back({r, c});
            }
    return m;
}

/// Running per-cell pick-up + drop-off totals. Partial accumulators merge
/// associatively.
class ActivityAccumulator {
public:
    ActivityAccumulator(std::size_t rows, std::size_t cols) : totals_(rows, cols) {}

    void add(const raster::DemandFrame& frame);
    void merge(const ActivityAccumulator& other);
    [[nodiscard]] ActivityMask finish() const { return from_activity(totals_); }
    [[nodiscard]] const Image<std::uint64_t>& totals() const noexcept { return totals_; }

private:
    Image<std::uint64_t> totals_;
};

/// Half-open range of absolute hour indices.
struct HourWindow {
    std::int64_t first = 0;
    std::int64_t last = 0;  // exclusive
};

/// M(r, c) = 1 iff the cell saw any pick-up or drop-off in the store (or in
/// `window` when given). Throws DataError on an empty store or window.
[[nodiscard]] ActivityMask build_mask(const raster::FrameStore& store, std::optional<HourWindow> window = {},
                                      unsigned threads = 0);

/// Values of `image` at the active cells, row-major. Throws DataError on a
/// shape mismatch.
template <class T>
[[nodiscard]] std::vector<double> apply_mask(const Image<T>& image, const ActivityMask& m);

/// Mask persisted as a 16-bit PNG of 0/1 values.
void write_mask_png(const std::filesystem::path& path, const ActivityMask& m);
[[nodiscard]] ActivityMask read_mask_png(const std::filesystem::path& path);
/// Active support as "index,row,col" rows.
void write_omega_csv(std::ostream& out, const ActivityMask& m);

/// Hourly pick-up and drop-off values restricted to the active support:
/// hour-major arrays of hours x |active| doubles. This is the working form
/// for ranking, fitting and evaluation.
struct MaskedSeries {
    std::size_t hours = 0;
    std::size_t active = 0;
    std::vector<double> pickup;
    std::vector<double> dropoff;
    std::vector<std::uint8_t> missing;   // per hour
    std::vector<std::uint32_t> frame_max;  // per hour, max over the full frame (both channels)

    MaskedSeries() = default;
    MaskedSeries(std::size_t hours, std::size_t active);

    [[nodiscard]] std::span<const double> pickup_at(std::int64_t t) const;
    [[nodiscard]] std::span<const double> dropoff_at(std::int64_t t) const;
    [[nodiscard]] std::span<double> pickup_at(std::int64_t t);
    [[nodiscard]] std::span<double> dropoff_at(std::int64_t t);

    /// Gathers one frame into hour slot `t`.
    void assign(std::int64_t t, const raster::DemandFrame& frame, std::span<const std::size_t> flat_active);

    /// Largest pixel over frames in [first, last), both channels.
    [[nodiscard]] std::uint32_t max_pixel(std::int64_t first, std::int64_t last) const;
};

[[nodiscard]] MaskedSeries mask_series(const raster::FrameStore& store, const ActivityMask& m, unsigned threads = 0);

}  // namespace gridlag::mask
