#include "gridlag/mask.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "gridlag/csv.hpp"
#include "gridlag/errors.hpp"
#include "gridlag/parallel.hpp"
#include "gridlag/png_io.hpp"

namespace gridlag::mask {

std::vector<std::size_t> ActivityMask::flat_indices() const {
    std::vector<std::size_t> out;
    out.reserve(omega.size());
    for (const auto& c : omega) out.push_back(c.row * grid.cols() + c.col);
    return out;
}

void ActivityAccumulator::add(const raster::DemandFrame& frame) {
    if (!frame.pickup.same_shape(totals_) || !frame.dropoff.same_shape(totals_))
        throw DataError("frame shape does not match the mask grid");
    auto t = totals_.values();
    auto p = frame.pickup.values();
    auto d = frame.dropoff.values();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += std::uint64_t{p[i]} + d[i];
}

void ActivityAccumulator::merge(const ActivityAccumulator& other) {
    if (!other.totals_.same_shape(totals_)) throw DataError("cannot merge accumulators of different shapes");
    auto t = totals_.values();
    auto o = other.totals_.values();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += o[i];
}

ActivityMask build_mask(const raster::FrameStore& store, std::optional<HourWindow> window, unsigned threads) {
    HourWindow w = window.value_or(HourWindow{0, static_cast<std::int64_t>(store.size())});
    w.first = std::max<std::int64_t>(w.first, 0);
    w.last = std::min<std::int64_t>(w.last, static_cast<std::int64_t>(store.size()));
    if (w.last <= w.first) throw DataError("mask requires at least one frame");
    const auto& g = store.grid();
    const auto n = static_cast<std::size_t>(w.last - w.first);
    const unsigned workers = worker_count(threads, n);
    std::vector<ActivityAccumulator> parts(workers, ActivityAccumulator(g.rows, g.cols));
    parallel_for(workers, workers, [&](std::size_t k) {
        for (std::size_t i = k; i < n; i += workers) parts[k].add(store[static_cast<std::size_t>(w.first) + i]);
    });
    for (std::size_t k = 1; k < parts.size(); ++k) parts[0].merge(parts[k]);
    return parts[0].finish();
}

template <class T>
std::vector<double> apply_mask(const Image<T>& image, const ActivityMask& m) {
    if (!image.same_shape(m.grid))
        throw DataError(fmt::format("image shape {}x{} does not match mask shape {}x{}", image.rows(), image.cols(),
                                    m.rows(), m.cols()));
    std::vector<double> out;
    out.reserve(m.omega.size());
    for (const auto& c : m.omega) out.push_back(static_cast<double>(image(c.row, c.col)));
    return out;
}

template std::vector<double> apply_mask(const Image<double>&, const ActivityMask&);
template std::vector<double> apply_mask(const Image<std::uint32_t>&, const ActivityMask&);
template std::vector<double> apply_mask(const Image<std::uint8_t>&, const ActivityMask&);

void write_mask_png(const std::filesystem::path& path, const ActivityMask& m) {
    CountImage img(m.rows(), m.cols());
    for (const auto& c : m.omega) img(c.row, c.col) = 1;
    png::write_gray16(path, img);
}

ActivityMask read_mask_png(const std::filesystem::path& path) {
    const auto img = png::read_gray16(path);
    for (auto v : img.values())
        if (v > 1) throw DataError(fmt::format("{}: mask pixels must be 0 or 1", path.string()));
    return from_activity(img);
}

void write_omega_csv(std::ostream& out, const ActivityMask& m) {
    out << "index,row,col\n";
    for (std::size_t k = 0; k < m.omega.size(); ++k)
        out << k << ',' << m.omega[k].row << ',' << m.omega[k].col << '\n';
}

MaskedSeries::MaskedSeries(std::size_t h, std::size_t a)
    : hours(h), active(a), pickup(h * a), dropoff(h * a), missing(h), frame_max(h) {}

namespace {
void check_hour(const MaskedSeries& s, std::int64_t t) {
    if (t < 0 || static_cast<std::size_t>(t) >= s.hours)
        throw DataError(fmt::format("hour index {} outside the series (0..{})", t, s.hours));
}
}  // namespace

std::span<const double> MaskedSeries::pickup_at(std::int64_t t) const {
    check_hour(*this, t);
    return std::span(pickup).subspan(static_cast<std::size_t>(t) * active, active);
}
std::span<const double> MaskedSeries::dropoff_at(std::int64_t t) const {
    check_hour(*this, t);
    return std::span(dropoff).subspan(static_cast<std::size_t>(t) * active, active);
}
std::span<double> MaskedSeries::pickup_at(std::int64_t t) {
    check_hour(*this, t);
    return std::span(pickup).subspan(static_cast<std::size_t>(t) * active, active);
}
std::span<double> MaskedSeries::dropoff_at(std::int64_t t) {
    check_hour(*this, t);
    return std::span(dropoff).subspan(static_cast<std::size_t>(t) * active, active);
}

void MaskedSeries::assign(std::int64_t t, const raster::DemandFrame& frame, std::span<const std::size_t> flat) {
    if (flat.size() != active) throw DataError("active index list does not match the series width");
    auto p = pickup_at(t);
    auto d = dropoff_at(t);
    const auto fp = frame.pickup.values();
    const auto fd = frame.dropoff.values();
    for (std::size_t k = 0; k < active; ++k) {
        p[k] = fp[flat[k]];
        d[k] = fd[flat[k]];
    }
    std::uint32_t mx = 0;
    for (auto v : fp) mx = std::max(mx, v);
    for (auto v : fd) mx = std::max(mx, v);
    frame_max[static_cast<std::size_t>(t)] = mx;
    missing[static_cast<std::size_t>(t)] = frame.missing ? 1 : 0;
}

std::uint32_t MaskedSeries::max_pixel(std::int64_t first, std::int64_t last) const {
    first = std::max<std::int64_t>(first, 0);
    last = std::min<std::int64_t>(last, static_cast<std::int64_t>(hours));
    std::uint32_t mx = 0;
    for (auto t = first; t < last; ++t) mx = std::max(mx, frame_max[static_cast<std::size_t>(t)]);
    return mx;
}

MaskedSeries mask_series(const raster::FrameStore& store, const ActivityMask& m, unsigned threads) {
    if (!m.grid.same_shape(store.grid().rows, store.grid().cols))
        throw DataError("mask shape does not match the frame grid");
    MaskedSeries s(store.size(), m.active_count());
    const auto flat = m.flat_indices();
    parallel_for(store.size(), threads,
                 [&](std::size_t t) { s.assign(static_cast<std::int64_t>(t), store[t], flat); });
    return s;
}

}  // namespace gridlag::mask
