#include "gridlag/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gridlag/parallel.hpp"

namespace gridlag::raster {

double GridSpec::diagonal() const noexcept { return std::hypot(cell_w, cell_h); }

void GridSpec::validate() const {
    if (!(cell_w > 0.0) || !(cell_h > 0.0) || !std::isfinite(cell_w) || !std::isfinite(cell_h))
        throw ConfigError(fmt::format("cell size must be positive (got {} x {})", cell_w, cell_h));
    if (rows == 0 || cols == 0) throw ConfigError("grid must have at least one row and one column");
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) throw ConfigError("grid origin must be finite");
}

GridSpec build_grid(const Extent& b, double cell_w, double cell_h) {
    GridSpec g{b.min_x, b.max_y, cell_w, cell_h, 1, 1};
    g.validate();
    const double width = b.max_x - b.min_x;
    const double height = b.max_y - b.min_y;
    if (!(width > 0.0) || !(height > 0.0))
        throw DataError(fmt::format("grid bounds have zero extent ({} x {} m)", width, height));
    g.cols = static_cast<std::size_t>(std::ceil(width / cell_w));
    g.rows = static_cast<std::size_t>(std::ceil(height / cell_h));
    return g;
}

GridSpec build_grid(std::span<const geo::LocatedTrip> trips, double cell_w, double cell_h) {
    if (trips.empty()) throw DataError("cannot build a grid from an empty trip set");
    Extent e{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    auto extend = [&](geo::UtmPoint p) {
        if (!std::isfinite(p.easting) || !std::isfinite(p.northing))
            throw DataError("trip coordinates must be finite");
        e.min_x = std::min(e.min_x, p.easting);
        e.max_x = std::max(e.max_x, p.easting);
        e.min_y = std::min(e.min_y, p.northing);
        e.max_y = std::max(e.max_y, p.northing);
    };
    for (const auto& t : trips) {
        extend(t.origin);
        extend(t.dest);
    }
    GridSpec g{e.min_x, e.max_y, cell_w, cell_h, 1, 1};
    g.validate();
    g.cols = static_cast<std::size_t>(std::floor((e.max_x - e.min_x) / cell_w)) + 1;
    g.rows = static_cast<std::size_t>(std::floor((e.max_y - e.min_y) / cell_h)) + 1;
    // Floating-point rounding can leave the far corner just outside.
    while (!point_to_cell(g, e.max_x, e.max_y)) ++g.cols;
    while (!point_to_cell(g, e.max_x, e.min_y)) ++g.rows;
    return g;
}

std::optional<Cell> point_to_cell(const GridSpec& g, double x, double y) noexcept {
    if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
    const double fc = std::floor((x - g.origin_x) / g.cell_w);
    const double fr = std::floor((g.origin_y - y) / g.cell_h);
    if (fc < -1.0 || fr < -1.0 || fc > static_cast<double>(g.cols) || fr > static_cast<double>(g.rows))
        return std::nullopt;
    auto c = static_cast<long long>(fc);
    auto r = static_cast<long long>(fr);
    auto west = [&](long long col) { return g.origin_x + static_cast<double>(col) * g.cell_w; };
    auto north = [&](long long row) { return g.origin_y - static_cast<double>(row) * g.cell_h; };
    // Align with the rectangle definition when the division rounded across an edge.
    if (x < west(c)) --c;
    else if (x >= west(c + 1)) ++c;
    if (y > north(r)) --r;
    else if (y <= north(r + 1)) ++r;
    if (c < 0 || r < 0 || c >= static_cast<long long>(g.cols) || r >= static_cast<long long>(g.rows))
        return std::nullopt;
    return Cell{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
}

DemandFrame rasterize_hour(std::span<const geo::LocatedTrip> trips, const GridSpec& g, Days day, int hour,
                           RasterTally* tally) {
    DemandFrame f{day, hour, CountImage(g.rows, g.cols), CountImage(g.rows, g.cols), false};
    for (const auto& t : trips) {
        if (t.start.day == day && t.start.hour() == hour) {
            if (auto cell = point_to_cell(g, t.origin.easting, t.origin.northing))
                ++f.pickup(cell->row, cell->col);
            else if (tally)
                ++tally->pickup_out_of_grid;
        }
        if (t.end.day == day && t.end.hour() == hour) {
            if (auto cell = point_to_cell(g, t.dest.easting, t.dest.northing))
                ++f.dropoff(cell->row, cell->col);
            else if (tally)
                ++tally->dropoff_out_of_grid;
        }
    }
    return f;
}

FrameStore::FrameStore(GridSpec grid, DayRange range) : grid_(grid), range_(range) {
    frames_.reserve(static_cast<std::size_t>(range.hours()));
    for (std::int64_t h = 0; h < range.hours(); ++h) {
        const auto t = range.hour_start(h);
        frames_.push_back({t.day, t.hour(), CountImage(grid.rows, grid.cols), CountImage(grid.rows, grid.cols),
                           false});
    }
}

namespace {

constexpr std::uint32_t kNoCell = std::numeric_limits<std::uint32_t>::max();

// Flat cell indices of in-range, in-grid events grouped by hour (CSR layout).
struct HourBuckets {
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> cells;

    [[nodiscard]] std::span<const std::uint32_t> hour(std::size_t h) const {
        return std::span(cells).subspan(offsets[h], offsets[h + 1] - offsets[h]);
    }
};

struct Event {
    std::int64_t hour;
    std::uint32_t cell;
};

HourBuckets bucket(const std::vector<Event>& events, std::size_t hours) {
    HourBuckets b;
    b.offsets.assign(hours + 1, 0);
    for (const auto& e : events) ++b.offsets[static_cast<std::size_t>(e.hour) + 1];
    for (std::size_t h = 0; h < hours; ++h) b.offsets[h + 1] += b.offsets[h];
    b.cells.resize(events.size());
    std::vector<std::size_t> cursor(b.offsets.begin(), b.offsets.end() - 1);
    for (const auto& e : events) b.cells[cursor[static_cast<std::size_t>(e.hour)]++] = e.cell;
    return b;
}

struct Prepared {
    HourBuckets pickups;
    HourBuckets dropoffs;
    std::vector<std::uint8_t> missing;
};

Prepared prepare(std::span<const geo::LocatedTrip> trips, const GridSpec& g, const DayRange& range, DstRule rule,
                 RasterTally* tally) {
    g.validate();
    if (g.rows * g.cols >= kNoCell) throw ConfigError("grid too large");
    const auto hours = static_cast<std::size_t>(range.hours());
    Prepared p;
    p.missing.resize(hours);
    for (std::size_t h = 0; h < hours; ++h) {
        const auto t = range.hour_start(static_cast<std::int64_t>(h));
        p.missing[h] = is_nonexistent_hour(t.day, t.hour(), rule) ? 1 : 0;
    }
    RasterTally local;
    std::vector<Event> starts, ends;
    starts.reserve(trips.size());
    ends.reserve(trips.size());
    auto classify = [&](const LocalDateTime& when, geo::UtmPoint where, std::vector<Event>& out,
                        std::size_t& out_of_range, std::size_t& in_missing, std::size_t& out_of_grid) {
        const auto h = range.hour_index(when);
        if (h < 0) {
            ++out_of_range;
            return;
        }
        if (p.missing[static_cast<std::size_t>(h)]) {
            ++in_missing;
            return;
        }
        const auto cell = point_to_cell(g, where.easting, where.northing);
        if (!cell) {
            ++out_of_grid;
            return;
        }
        out.push_back({h, static_cast<std::uint32_t>(cell->row * g.cols + cell->col)});
    };
    for (const auto& t : trips) {
        classify(t.start, t.origin, starts, local.pickup_out_of_range, local.pickup_in_missing_hour,
                 local.pickup_out_of_grid);
        classify(t.end, t.dest, ends, local.dropoff_out_of_range, local.dropoff_in_missing_hour,
                 local.dropoff_out_of_grid);
    }
    p.pickups = bucket(starts, hours);
    p.dropoffs = bucket(ends, hours);
    if (tally) {
        tally->pickup_out_of_grid += local.pickup_out_of_grid;
        tally->dropoff_out_of_grid += local.dropoff_out_of_grid;
        tally->pickup_out_of_range += local.pickup_out_of_range;
        tally->dropoff_out_of_range += local.dropoff_out_of_range;
        tally->pickup_in_missing_hour += local.pickup_in_missing_hour;
        tally->dropoff_in_missing_hour += local.dropoff_in_missing_hour;
    }
    return p;
}

void fill(const Prepared& p, std::size_t h, DemandFrame& f) {
    f.missing = p.missing[h] != 0;
    auto pick = f.pickup.values();
    auto drop = f.dropoff.values();
    for (auto c : p.pickups.hour(h)) ++pick[c];
    for (auto c : p.dropoffs.hour(h)) ++drop[c];
}

}  // namespace

void rasterize_range(std::span<const geo::LocatedTrip> trips, const GridSpec& g, const DayRange& range,
                     DstRule rule, const FrameSink& sink, RasterTally* tally) {
    const auto p = prepare(trips, g, range, rule, tally);
    for (std::int64_t h = 0; h < range.hours(); ++h) {
        const auto t = range.hour_start(h);
        DemandFrame f{t.day, t.hour(), CountImage(g.rows, g.cols), CountImage(g.rows, g.cols), false};
        fill(p, static_cast<std::size_t>(h), f);
        sink(h, f);
    }
}

FrameStore rasterize_range(std::span<const geo::LocatedTrip> trips, const GridSpec& g, const DayRange& range,
                           DstRule rule, RasterTally* tally, unsigned threads) {
    const auto p = prepare(trips, g, range, rule, tally);
    FrameStore store(g, range);
    parallel_for(store.size(), threads, [&](std::size_t h) { fill(p, h, store[h]); });
    return store;
}

std::uint64_t total(const CountImage& img) noexcept {
    std::uint64_t s = 0;
    for (auto v : img.values()) s += v;
    return s;
}

}  // namespace gridlag::raster
