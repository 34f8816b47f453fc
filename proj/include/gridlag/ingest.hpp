#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridlag/civil_time.hpp"
#include "gridlag/errors.hpp"

namespace gridlag::ingest {

/// A mandatory column is absent from the header row.
class SchemaError : public DataError {
public:
    using DataError::DataError;
};

/// Maps logical trip fields onto the header names of a concrete export.
/// Defaults follow the City of Austin shared-micromobility export, which
/// reports durations in seconds and distances in meters.
struct ColumnMap {
    std::string device_id = "Device ID";          // optional
    std::string vehicle_type = "Vehicle Type";
    std::string start_time = "Start Time";
    std::string end_time = "End Time";
    std::string duration = "Trip Duration";       // optional; derived from timestamps when absent
    std::string distance = "Trip Distance";
    std::string origin_geoid = "Census Tract Start";
    std::string dest_geoid = "Census Tract End";
    /// Source units per minute / per kilometer (values are divided by these).
    double duration_units_per_minute = 60.0;
    double distance_units_per_km = 1000.0;
    /// Largest tolerated gap between the duration column and end - start.
    /// Off by default: some exports coarsen the timestamps but not the
    /// duration column.
    double duration_tolerance_minutes = std::numeric_limits<double>::infinity();
};

struct RawTripRow {
    std::size_t row_index = 0;  // 0-based data row (header excluded)
    std::string device_id;
    std::string vehicle_type;
    LocalDateTime start;
    LocalDateTime end;
    double duration_min = 0.0;
    double distance_km = 0.0;
    std::string origin_geoid;
    std::string dest_geoid;
    std::vector<std::string> cells;  // the untouched source record
};

struct RowError {
    std::size_t row_index = 0;
    std::string reason;  // e.g. "malformed:duration"
    std::string detail;
};

struct ParsedTrips {
    std::vector<std::string> header;
    std::vector<RawTripRow> rows;
    std::vector<RowError> errors;

    [[nodiscard]] std::size_t total_rows() const noexcept { return rows.size() + errors.size(); }
};

/// Parses a header-led delimited trip export. Every data row yields either a
/// RawTripRow or a RowError; both lists keep input order.
/// Throws SchemaError when a mandatory column is missing.
[[nodiscard]] ParsedTrips parse_trips(std::istream& source, const ColumnMap& schema, char delimiter = ',');

struct Bounds {
    double min = 0.0;
    double max = 0.0;
    [[nodiscard]] bool contains(double v) const noexcept { return v >= min && v <= max; }
};

struct FilterConfig {
    std::string mode = "scooter";
    int year = 2019;
    Bounds duration{1.0, 120.0};  // minutes
    Bounds distance{0.1, 35.0};   // kilometers
    Bounds speed{2.0, 26.0};      // km/h

    /// Throws ConfigError unless min < max for every bound pair.
    void validate() const;
};

struct TripRecord : RawTripRow {
    double speed_kmh = 0.0;
};

enum class RejectReason : std::size_t {
    mode,
    year,
    duration,
    distance,
    speed,
    malformed,
    unresolved_geoid,
    outside_boundary,
};
inline constexpr std::size_t kRejectReasonCount = 8;

[[nodiscard]] std::string_view to_string(RejectReason r) noexcept;

struct SummaryStat {
    double mean = 0.0;
    double median = 0.0;
};

struct TripSummary {
    std::size_t count = 0;
    SummaryStat duration_min;
    SummaryStat distance_km;
    SummaryStat speed_kmh;
};

struct FilterReport {
    std::size_t total_rows = 0;
    std::size_t kept = 0;
    /// Rows rejected at parse time; included in rejected[malformed].
    std::size_t parse_malformed = 0;
    std::array<std::size_t, kRejectReasonCount> rejected{};
    std::optional<TripSummary> summary;

    [[nodiscard]] std::size_t rejected_count(RejectReason r) const noexcept {
        return rejected[static_cast<std::size_t>(r)];
    }
    void reject(RejectReason r, std::size_t n = 1) noexcept { rejected[static_cast<std::size_t>(r)] += n; }
    [[nodiscard]] std::size_t rejected_total() const noexcept;

    /// kept / total_rows.
    [[nodiscard]] double retention_ratio() const noexcept;
    /// kept / (total_rows - parse_malformed): the denominator excluding rows
    /// that could not be parsed at all.
    [[nodiscard]] double retention_ratio_parsed() const noexcept;

    /// Associative merge of partition reports. The summary is dropped; it is
    /// recomputed from the merged records.
    void merge(const FilterReport& other) noexcept;

    /// Moves `n` kept rows to the given rejection reason (used by later stages).
    void move_kept_to(RejectReason r, std::size_t n);
};

struct FilterResult {
    std::vector<TripRecord> kept;
    FilterReport report;
};

/// Applies the trip filters. Each rejected row is counted once, under the
/// first failing criterion in the order mode, year, duration, distance, speed,
/// malformed GEOID.
[[nodiscard]] FilterResult filter_trips(std::span<const RawTripRow> rows, const FilterConfig& cfg);

/// As above; rows that failed to parse are counted as malformed.
[[nodiscard]] FilterResult filter_trips(const ParsedTrips& parsed, const FilterConfig& cfg);

/// Exact sample means and medians. Throws DataError on an empty record set.
[[nodiscard]] TripSummary trip_summary(std::span<const TripRecord> records);

[[nodiscard]] bool is_wellformed_geoid(std::string_view geoid) noexcept;

void write_kept_csv(std::ostream& out, const std::vector<std::string>& header,
                    std::span<const TripRecord> records);
void write_report_csv(std::ostream& out, const FilterReport& report);
void write_report_text(std::ostream& out, const FilterReport& report);

}  // namespace gridlag::ingest
