#include "gridlag/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "gridlag/csv.hpp"

namespace gridlag::ingest {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s)
        if (c != ',') cleaned.push_back(c);  // thousands separators in some exports
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), v);
    if (ec != std::errc{} || ptr != cleaned.data() + cleaned.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

struct ColumnIndex {
    std::optional<std::size_t> device_id, vehicle_type, start_time, end_time, duration, distance, origin, dest;
};

std::optional<std::size_t> find_column(const std::vector<std::string>& header, const std::string& name) {
    if (name.empty()) return std::nullopt;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (trim(header[i]) == trim(name)) return i;
    return std::nullopt;
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name,
                           std::string_view role) {
    auto idx = find_column(header, name);
    if (!idx) throw SchemaError(fmt::format("missing mandatory column '{}' ({})", name, role));
    return *idx;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ParsedTrips parse_trips(std::istream& source, const ColumnMap& schema, char delimiter) {
    csv::Reader reader(source, delimiter);
    ParsedTrips out;
    if (!reader.next(out.header)) throw SchemaError("trip source is empty (no header row)");

    ColumnIndex ix;
    ix.vehicle_type = require_column(out.header, schema.vehicle_type, "vehicle type");
    ix.start_time = require_column(out.header, schema.start_time, "start time");
    ix.end_time = require_column(out.header, schema.end_time, "end time");
    ix.distance = require_column(out.header, schema.distance, "distance");
    ix.origin = require_column(out.header, schema.origin_geoid, "origin GEOID");
    ix.dest = require_column(out.header, schema.dest_geoid, "destination GEOID");
    ix.device_id = find_column(out.header, schema.device_id);
    ix.duration = find_column(out.header, schema.duration);

    std::vector<std::string> cells;
    std::size_t row = 0;
    while (reader.next(cells)) {
        if (cells.size() == 1 && trim(cells[0]).empty()) continue;  // blank line
        const std::size_t index = row++;
        auto fail = [&](std::string reason, std::string detail) {
            out.errors.push_back({index, std::move(reason), std::move(detail)});
        };
        if (cells.size() != out.header.size()) {
            fail("malformed:field_count",
                 fmt::format("expected {} fields, found {}", out.header.size(), cells.size()));
            continue;
        }

        RawTripRow r;
        r.row_index = index;
        r.vehicle_type = std::string{trim(cells[*ix.vehicle_type])};
        if (ix.device_id) r.device_id = cells[*ix.device_id];
        r.origin_geoid = std::string{trim(cells[*ix.origin])};
        r.dest_geoid = std::string{trim(cells[*ix.dest])};

        auto start = parse_timestamp(cells[*ix.start_time]);
        if (!start) {
            fail("malformed:start_time", cells[*ix.start_time]);
            continue;
        }
        auto end = parse_timestamp(cells[*ix.end_time]);
        if (!end) {
            fail("malformed:end_time", cells[*ix.end_time]);
            continue;
        }
        if (*end < *start) {
            fail("malformed:end_time", "end time precedes start time");
            continue;
        }
        r.start = *start;
        r.end = *end;

        auto distance = parse_number(cells[*ix.distance]);
        if (!distance) {
            fail("malformed:distance", cells[*ix.distance]);
            continue;
        }
        r.distance_km = *distance / schema.distance_units_per_km;

        const double derived = static_cast<double>(r.end.epoch_seconds() - r.start.epoch_seconds()) / 60.0;
        if (ix.duration) {
            auto duration = parse_number(cells[*ix.duration]);
            if (!duration) {
                fail("malformed:duration", cells[*ix.duration]);
                continue;
            }
            r.duration_min = *duration / schema.duration_units_per_minute;
            if (std::abs(r.duration_min - derived) > schema.duration_tolerance_minutes) {
                fail("malformed:duration",
                     fmt::format("duration column {} min disagrees with timestamps ({} min)", r.duration_min,
                                 derived));
                continue;
            }
        } else {
            r.duration_min = derived;
        }
        r.cells = std::move(cells);
        cells = {};
        out.rows.push_back(std::move(r));
    }
    return out;
}

void FilterConfig::validate() const {
    auto check = [](const Bounds& b, std::string_view name) {
        if (!(b.min < b.max)) throw ConfigError(fmt::format("{} bounds require min < max", name));
    };
    check(duration, "duration");
    check(distance, "distance");
    check(speed, "speed");
    if (mode.empty()) throw ConfigError("vehicle mode must not be empty");
}

std::string_view to_string(RejectReason r) noexcept {
    switch (r) {
        case RejectReason::mode: return "mode";
        case RejectReason::year: return "year";
        case RejectReason::duration: return "duration";
        case RejectReason::distance: return "distance";
        case RejectReason::speed: return "speed";
        case RejectReason::malformed: return "malformed";
        case RejectReason::unresolved_geoid: return "unresolved_geoid";
        case RejectReason::outside_boundary: return "outside_boundary";
    }
    return "unknown";
}

std::size_t FilterReport::rejected_total() const noexcept {
    return std::accumulate(rejected.begin(), rejected.end(), std::size_t{0});
}

double FilterReport::retention_ratio() const noexcept {
    return total_rows ? static_cast<double>(kept) / static_cast<double>(total_rows) : 0.0;
}

double FilterReport::retention_ratio_parsed() const noexcept {
    std::size_t parsed = total_rows - parse_malformed;
    return parsed ? static_cast<double>(kept) / static_cast<double>(parsed) : 0.0;
}

void FilterReport::merge(const FilterReport& other) noexcept {
    total_rows += other.total_rows;
    kept += other.kept;
    parse_malformed += other.parse_malformed;
    for (std::size_t i = 0; i < kRejectReasonCount; ++i) rejected[i] += other.rejected[i];
    summary.reset();
}

void FilterReport::move_kept_to(RejectReason r, std::size_t n) {
    if (n > kept) throw std::logic_error("cannot reject more rows than were kept");
    kept -= n;
    reject(r, n);
}

bool is_wellformed_geoid(std::string_view geoid) noexcept {
    return !geoid.empty() &&
           std::all_of(geoid.begin(), geoid.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

FilterResult filter_trips(std::span<const RawTripRow> rows, const FilterConfig& cfg) {
    cfg.validate();
    FilterResult out;
    out.report.total_rows = rows.size();
    for (const auto& r : rows) {
        std::optional<RejectReason> why;
        const double speed = r.duration_min > 0.0 ? r.distance_km / (r.duration_min / 60.0) : 0.0;
        if (!iequals(r.vehicle_type, cfg.mode))
            why = RejectReason::mode;
        else if (r.start.year() != cfg.year)
            why = RejectReason::year;
        else if (!cfg.duration.contains(r.duration_min))
            why = RejectReason::duration;
        else if (!cfg.distance.contains(r.distance_km))
            why = RejectReason::distance;
        else if (!cfg.speed.contains(speed))
            why = RejectReason::speed;
        else if (!is_wellformed_geoid(r.origin_geoid) || !is_wellformed_geoid(r.dest_geoid))
            why = RejectReason::malformed;

        if (why) {
            out.report.reject(*why);
            continue;
        }
        TripRecord rec;
        static_cast<RawTripRow&>(rec) = r;
        rec.speed_kmh = speed;
        out.kept.push_back(std::move(rec));
    }
    out.report.kept = out.kept.size();
    if (!out.kept.empty()) out.report.summary = trip_summary(out.kept);
    return out;
}

FilterResult filter_trips(const ParsedTrips& parsed, const FilterConfig& cfg) {
    FilterResult out = filter_trips(std::span<const RawTripRow>(parsed.rows), cfg);
    out.report.total_rows += parsed.errors.size();
    out.report.parse_malformed = parsed.errors.size();
    out.report.reject(RejectReason::malformed, parsed.errors.size());
    return out;
}

TripSummary trip_summary(std::span<const TripRecord> records) {
    if (records.empty()) throw DataError("trip summary requested for an empty record set");
    std::vector<double> dur, dist, speed;
    dur.reserve(records.size());
    dist.reserve(records.size());
    speed.reserve(records.size());
    for (const auto& r : records) {
        dur.push_back(r.duration_min);
        dist.push_back(r.distance_km);
        speed.push_back(r.speed_kmh);
    }
    TripSummary s;
    s.count = records.size();
    s.duration_min = {mean_of(dur), median_of(dur)};
    s.distance_km = {mean_of(dist), median_of(dist)};
    s.speed_kmh = {mean_of(speed), median_of(speed)};
    return s;
}

void write_kept_csv(std::ostream& out, const std::vector<std::string>& header,
                    std::span<const TripRecord> records) {
    auto h = header;
    h.push_back("speed_kmh");
    csv::write_row(out, h);
    for (const auto& r : records) {
        auto row = r.cells;
        row.push_back(csv::num(r.speed_kmh));
        csv::write_row(out, row);
    }
}

void write_report_csv(std::ostream& out, const FilterReport& report) {
    out << "item,value\n";
    out << "total_rows," << report.total_rows << '\n';
    for (std::size_t i = 0; i < kRejectReasonCount; ++i)
        out << "rejected_" << to_string(static_cast<RejectReason>(i)) << ',' << report.rejected[i] << '\n';
    out << "parse_malformed," << report.parse_malformed << '\n';
    out << "kept," << report.kept << '\n';
    out << "retention_ratio," << csv::num(report.retention_ratio()) << '\n';
    out << "retention_ratio_parsed," << csv::num(report.retention_ratio_parsed()) << '\n';
    if (report.summary) {
        const auto& s = *report.summary;
        out << "mean_duration_min," << csv::num(s.duration_min.mean) << '\n';
        out << "median_duration_min," << csv::num(s.duration_min.median) << '\n';
        out << "mean_distance_km," << csv::num(s.distance_km.mean) << '\n';
        out << "median_distance_km," << csv::num(s.distance_km.median) << '\n';
        out << "mean_speed_kmh," << csv::num(s.speed_kmh.mean) << '\n';
        out << "median_speed_kmh," << csv::num(s.speed_kmh.median) << '\n';
    }
}

void write_report_text(std::ostream& out, const FilterReport& report) {
    out << fmt::format("Trip filtering report\n");
    out << fmt::format("  input rows            {:>12}\n", report.total_rows);
    for (std::size_t i = 0; i < kRejectReasonCount; ++i)
        out << fmt::format("  rejected: {:<18} {:>8}\n", to_string(static_cast<RejectReason>(i)),
                           report.rejected[i]);
    out << fmt::format("    (of which unparsable  {:>8})\n", report.parse_malformed);
    out << fmt::format("  kept                  {:>12}\n", report.kept);
    out << fmt::format("  retention (all rows)      {:.4f}\n", report.retention_ratio());
    out << fmt::format("  retention (parsed rows)   {:.4f}\n", report.retention_ratio_parsed());
    if (report.summary) {
        const auto& s = *report.summary;
        out << fmt::format("  duration  mean {:8.2f} min   median {:8.2f} min\n", s.duration_min.mean,
                           s.duration_min.median);
        out << fmt::format("  distance  mean {:8.2f} km    median {:8.2f} km\n", s.distance_km.mean,
                           s.distance_km.median);
        out << fmt::format("  speed     mean {:8.2f} km/h  median {:8.2f} km/h\n", s.speed_kmh.mean,
                           s.speed_kmh.median);
    }
}

}  // namespace gridlag::ingest
