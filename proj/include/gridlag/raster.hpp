#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gridlag/civil_time.hpp"
#include "gridlag/geo.hpp"
#include "gridlag/image.hpp"

namespace gridlag::raster {

/// Uniform metric grid in projected coordinates. The origin is the
/// north-west corner; rows grow southwards, columns eastwards.
struct GridSpec {
    double origin_x = 0.0;  // easting of the western edge, m
    double origin_y = 0.0;  // northing of the northern edge, m
    double cell_w = 240.0;  // m, east-west extent of a cell
    double cell_h = 220.0;  // m, north-south extent of a cell
    std::size_t rows = 1;
    std::size_t cols = 1;

    [[nodiscard]] double diagonal() const noexcept;
    [[nodiscard]] double east_edge() const noexcept { return origin_x + static_cast<double>(cols) * cell_w; }
    [[nodiscard]] double south_edge() const noexcept { return origin_y - static_cast<double>(rows) * cell_h; }
    /// Throws ConfigError on non-positive cell sizes or an empty shape.
    void validate() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct Extent {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;
};

/// Grid for an explicit rectangle: W = ceil(width / cell_w), H = ceil(height / cell_h).
/// Throws DataError when either side has zero (or negative) extent.
[[nodiscard]] GridSpec build_grid(const Extent& bounds, double cell_w = 240.0, double cell_h = 220.0);

/// Smallest grid anchored at (min x, max y) whose half-open cells contain
/// every origin and destination. A single point gives a 1x1 grid.
/// Throws DataError on an empty trip set.
[[nodiscard]] GridSpec build_grid(std::span<const geo::LocatedTrip> trips, double cell_w = 240.0,
                                  double cell_h = 220.0);

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Cell (r, c) covers [x0 + c*w, x0 + (c+1)*w) x (y0 - (r+1)*h, y0 - r*h].
/// Returns nullopt outside the grid.
[[nodiscard]] std::optional<Cell> point_to_cell(const GridSpec& g, double x, double y) noexcept;

struct DemandFrame {
    Days day{};
    int hour = 0;
    CountImage pickup;
    CountImage dropoff;
    bool missing = false;

    friend bool operator==(const DemandFrame&, const DemandFrame&) = default;
};

/// Trips that did not land in any emitted frame.
struct RasterTally {
    std::size_t pickup_out_of_grid = 0;
    std::size_t dropoff_out_of_grid = 0;
    std::size_t pickup_out_of_range = 0;
    std::size_t dropoff_out_of_range = 0;
    std::size_t pickup_in_missing_hour = 0;
    std::size_t dropoff_in_missing_hour = 0;
};

/// Counts pick-ups starting and drop-offs ending in hour `hour` of `day`.
[[nodiscard]] DemandFrame rasterize_hour(std::span<const geo::LocatedTrip> trips, const GridSpec& g, Days day,
                                         int hour, RasterTally* tally = nullptr);

/// Contiguous hourly frames over a day range, indexed by absolute hour.
class FrameStore {
public:
    FrameStore() = default;
    FrameStore(GridSpec grid, DayRange range);

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] const DayRange& range() const noexcept { return range_; }
    [[nodiscard]] std::size_t size() const noexcept { return frames_.size(); }
    [[nodiscard]] const DemandFrame& operator[](std::size_t hour_index) const { return frames_[hour_index]; }
    [[nodiscard]] DemandFrame& operator[](std::size_t hour_index) { return frames_[hour_index]; }
    [[nodiscard]] const DemandFrame& at(std::size_t hour_index) const { return frames_.at(hour_index); }
    [[nodiscard]] std::span<const DemandFrame> frames() const noexcept { return frames_; }

private:
    GridSpec grid_;
    DayRange range_;
    std::vector<DemandFrame> frames_;
};

using FrameSink = std::function<void(std::int64_t hour_index, const DemandFrame&)>;

/// Streams one frame per hour of `range`, in hour order. Hours that do not
/// exist on the local clock are emitted all-zero with missing = true, and
/// any trip timestamped in them is tallied and dropped.
void rasterize_range(std::span<const geo::LocatedTrip> trips, const GridSpec& g, const DayRange& range,
                     DstRule rule, const FrameSink& sink, RasterTally* tally = nullptr);

/// In-memory variant of the streaming rasterizer. Frames are built in
/// parallel (at most `threads` workers, 0 = hardware concurrency).
[[nodiscard]] FrameStore rasterize_range(std::span<const geo::LocatedTrip> trips, const GridSpec& g,
                                         const DayRange& range, DstRule rule = DstRule::us,
                                         RasterTally* tally = nullptr, unsigned threads = 0);

/// Sum of all pixels of an image.
[[nodiscard]] std::uint64_t total(const CountImage& img) noexcept;

}  // namespace gridlag::raster
