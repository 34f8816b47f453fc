#include "gridlag/frame_archive.hpp"

#include <charconv>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "gridlag/csv.hpp"
#include "gridlag/errors.hpp"
#include "gridlag/parallel.hpp"
#include "gridlag/png_io.hpp"

namespace gridlag::archive {

namespace fs = std::filesystem;

std::string frame_filename(Channel channel, Days day, int hour) {
    return fmt::format("{}_{}_{:02d}.png", channel == Channel::pickup ? "pickup" : "dropoff",
                       format_compact_date(day), hour);
}

void write_grid(std::ostream& out, const GridFile& g) {
    out << "origin_x = " << csv::num(g.grid.origin_x) << '\n'
        << "origin_y = " << csv::num(g.grid.origin_y) << '\n'
        << "cell_w = " << csv::num(g.grid.cell_w) << '\n'
        << "cell_h = " << csv::num(g.grid.cell_h) << '\n'
        << "rows = " << g.grid.rows << '\n'
        << "cols = " << g.grid.cols << '\n'
        << "first_day = " << format_date(g.range.first) << '\n'
        << "days = " << g.range.days << '\n';
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataError(fmt::format("grid file lacks '{}'", key));
    T v{};
    const auto& s = it->second;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw DataError(fmt::format("grid file: bad value for '{}': {}", key, s));
    return v;
}

}  // namespace

GridFile read_grid(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw DataError(fmt::format("grid file: expected key = value, got '{}'", body));
        kv[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
    }
    GridFile g;
    g.grid.origin_x = parse_number<double>(kv, "origin_x");
    g.grid.origin_y = parse_number<double>(kv, "origin_y");
    g.grid.cell_w = parse_number<double>(kv, "cell_w");
    g.grid.cell_h = parse_number<double>(kv, "cell_h");
    g.grid.rows = parse_number<std::size_t>(kv, "rows");
    g.grid.cols = parse_number<std::size_t>(kv, "cols");
    const auto day = parse_date(kv.count("first_day") ? kv["first_day"] : "");
    if (!day) throw DataError("grid file lacks a valid 'first_day'");
    g.range = DayRange{*day, parse_number<std::int32_t>(kv, "days")};
    if (g.range.days <= 0) throw DataError("grid file: 'days' must be positive");
    try {
        g.grid.validate();
    } catch (const ConfigError& e) {
        throw DataError(fmt::format("grid file: {}", e.what()));
    }
    return g;
}

ArchiveWriter::ArchiveWriter(fs::path dir, GridFile grid)
    : dir_(std::move(dir)), grid_(grid), entries_(static_cast<std::size_t>(grid.range.hours())) {
    fs::create_directories(dir_);
}

void ArchiveWriter::add(std::int64_t h, const raster::DemandFrame& frame) {
    if (h < 0 || h >= grid_.range.hours()) throw DataError(fmt::format("hour index {} outside archive range", h));
    png::write_gray16(dir_ / frame_filename(Channel::pickup, frame.day, frame.hour), frame.pickup);
    png::write_gray16(dir_ / frame_filename(Channel::dropoff, frame.day, frame.hour), frame.dropoff);
    entries_[static_cast<std::size_t>(h)] = ManifestEntry{h, frame.day, frame.hour, frame.missing};
}

void ArchiveWriter::finish() {
    std::ofstream manifest(dir_ / "manifest.csv", std::ios::trunc);
    if (!manifest) throw DataError(fmt::format("cannot write {}", (dir_ / "manifest.csv").string()));
    manifest << "channel,date,hour,hour_index,file,missing\n";
    for (const auto& e : entries_) {
        if (!e) throw DataError("archive is incomplete: not every hour was written");
        for (auto ch : {Channel::pickup, Channel::dropoff})
            manifest << (ch == Channel::pickup ? "pickup" : "dropoff") << ',' << format_date(e->day) << ','
                     << e->hour << ',' << e->hour_index << ',' << frame_filename(ch, e->day, e->hour) << ','
                     << (e->missing ? 1 : 0) << '\n';
    }
    std::ofstream grid(dir_ / "grid.txt", std::ios::trunc);
    if (!grid) throw DataError(fmt::format("cannot write {}", (dir_ / "grid.txt").string()));
    write_grid(grid, grid_);
}

void write_archive(const fs::path& dir, const raster::FrameStore& store, unsigned threads) {
    ArchiveWriter w(dir, {store.grid(), store.range()});
    // Files are independent; manifest slots are per hour.
    parallel_for(store.size(), threads,
                 [&](std::size_t h) { w.add(static_cast<std::int64_t>(h), store[h]); });
    w.finish();
}

Archive open_archive(const fs::path& dir) {
    Archive a;
    a.dir = dir;
    std::ifstream grid(dir / "grid.txt");
    if (!grid) throw DataError(fmt::format("no frame archive at {} (grid.txt missing)", dir.string()));
    a.grid = read_grid(grid);
    std::ifstream manifest(dir / "manifest.csv");
    if (!manifest) throw DataError(fmt::format("no frame archive at {} (manifest.csv missing)", dir.string()));

    const auto hours = static_cast<std::size_t>(a.grid.range.hours());
    std::vector<std::optional<ManifestEntry>> slots(hours);
    csv::Reader reader(manifest);
    std::vector<std::string> row;
    if (!reader.next(row) || row.size() != 6 || row[0] != "channel")
        throw DataError("manifest.csv: unexpected header");
    while (reader.next(row)) {
        if (row.size() != 6) throw DataError(fmt::format("manifest.csv line {}: expected 6 fields", reader.line()));
        std::int64_t h = -1;
        std::from_chars(row[3].data(), row[3].data() + row[3].size(), h);
        if (h < 0 || static_cast<std::size_t>(h) >= hours)
            throw DataError(fmt::format("manifest.csv line {}: bad hour index '{}'", reader.line(), row[3]));
        const auto expect = a.grid.range.hour_start(h);
        const auto day = parse_date(row[1]);
        if (!day || *day != expect.day || row[2] != std::to_string(expect.hour()))
            throw DataError(fmt::format("manifest.csv line {}: date/hour disagree with hour index", reader.line()));
        ManifestEntry e{h, expect.day, expect.hour(), row[5] == "1"};
        auto& slot = slots[static_cast<std::size_t>(h)];
        if (slot && slot->missing != e.missing)
            throw DataError(fmt::format("manifest.csv: inconsistent missing flag at hour {}", h));
        slot = e;
    }
    a.entries.reserve(hours);
    for (std::size_t h = 0; h < hours; ++h) {
        if (!slots[h]) throw DataError(fmt::format("manifest.csv does not list hour {}", h));
        a.entries.push_back(*slots[h]);
    }
    return a;
}

raster::DemandFrame load_frame(const Archive& a, std::int64_t h) {
    if (h < 0 || static_cast<std::size_t>(h) >= a.entries.size())
        throw DataError(fmt::format("hour index {} outside archive", h));
    const auto& e = a.entries[static_cast<std::size_t>(h)];
    raster::DemandFrame f{e.day, e.hour, png::read_gray16(a.dir / frame_filename(Channel::pickup, e.day, e.hour)),
                          png::read_gray16(a.dir / frame_filename(Channel::dropoff, e.day, e.hour)), e.missing};
    const auto& g = a.grid.grid;
    if (!f.pickup.same_shape(g.rows, g.cols) || !f.dropoff.same_shape(g.rows, g.cols))
        throw DataError(fmt::format("frame at hour {} does not match the {}x{} grid", h, g.rows, g.cols));
    return f;
}

raster::FrameStore load_store(const Archive& a, unsigned threads) {
    raster::FrameStore store(a.grid.grid, a.grid.range);
    parallel_for(store.size(), threads,
                 [&](std::size_t h) { store[h] = load_frame(a, static_cast<std::int64_t>(h)); });
    return store;
}

mask::ActivityMask build_mask(const Archive& a, std::optional<mask::HourWindow> window, unsigned threads) {
    mask::HourWindow w = window.value_or(mask::HourWindow{0, static_cast<std::int64_t>(a.entries.size())});
    w.first = std::max<std::int64_t>(w.first, 0);
    w.last = std::min<std::int64_t>(w.last, static_cast<std::int64_t>(a.entries.size()));
    if (w.last <= w.first) throw DataError("mask requires at least one frame");
    const auto n = static_cast<std::size_t>(w.last - w.first);
    const unsigned workers = worker_count(threads, n);
    const auto& g = a.grid.grid;
    std::vector<mask::ActivityAccumulator> parts(workers, mask::ActivityAccumulator(g.rows, g.cols));
    parallel_for(workers, workers, [&](std::size_t k) {
        for (std::size_t i = k; i < n; i += workers)
            parts[k].add(load_frame(a, w.first + static_cast<std::int64_t>(i)));
    });
    for (std::size_t k = 1; k < parts.size(); ++k) parts[0].merge(parts[k]);
    return parts[0].finish();
}

mask::MaskedSeries load_masked_series(const Archive& a, const mask::ActivityMask& m, unsigned threads) {
    const auto& g = a.grid.grid;
    if (!m.grid.same_shape(g.rows, g.cols)) throw DataError("mask shape does not match the archive grid");
    mask::MaskedSeries s(a.entries.size(), m.active_count());
    const auto flat = m.flat_indices();
    parallel_for(a.entries.size(), threads, [&](std::size_t h) {
        s.assign(static_cast<std::int64_t>(h), load_frame(a, static_cast<std::int64_t>(h)), flat);
    });
    return s;
}

}  // namespace gridlag::archive
