#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridlag/civil_time.hpp"
#include "gridlag/errors.hpp"
#include "gridlag/ingest.hpp"

namespace gridlag::geo {

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
    friend bool operator==(const LonLat&, const LonLat&) = default;
};

/// Closed ring: first vertex repeated as the last one.
using Ring = std::vector<LonLat>;

/// One polygon: rings[0] is the exterior, the remaining rings are holes.
struct PolygonPart {
    std::vector<Ring> rings;
};

/// A census tract (or any named area). Multi-part areas carry several parts.
struct TractPolygon {
    std::string geoid;
    std::vector<PolygonPart> parts;

    static TractPolygon single(std::string geoid, std::vector<Ring> rings) {
        return {std::move(geoid), {PolygonPart{std::move(rings)}}};
    }
};

class DegeneratePolygonError : public DataError {
public:
    using DataError::DataError;
};

/// Shoelace signed area in degree units; positive for counter-clockwise rings.
[[nodiscard]] double signed_area(const Ring& ring) noexcept;

/// Throws DataError when a ring has fewer than 4 vertices or is not closed,
/// or DegeneratePolygonError when an exterior ring has zero area.
void validate(const TractPolygon& poly);

/// Area-weighted planar centroid of the exterior rings minus holes, in degree
/// space. Throws DegeneratePolygonError (naming the geoid) for zero net area.
[[nodiscard]] LonLat polygon_centroid(const TractPolygon& poly);

/// Nonzero-winding containment. Points inside a hole are outside; points on
/// any ring boundary count as inside.
[[nodiscard]] bool point_in_polygon(LonLat pt, const TractPolygon& poly) noexcept;
[[nodiscard]] bool point_in_any(LonLat pt, std::span<const TractPolygon> polys) noexcept;

// ---------------------------------------------------------------------------
// Transverse Mercator / UTM

enum class Hemisphere { north, south };

struct ProjectionSpec {
    int utm_zone = 14;
    Hemisphere hemisphere = Hemisphere::north;
    double semi_major_m = 6378137.0;
    double flattening = 1.0 / 298.257223563;
    double scale_k0 = 0.9996;
    double false_easting_m = 500000.0;

    [[nodiscard]] double false_northing_m() const noexcept {
        return hemisphere == Hemisphere::north ? 0.0 : 10000000.0;
    }
    [[nodiscard]] double central_meridian_deg() const noexcept { return -183.0 + 6.0 * utm_zone; }
    /// Throws ConfigError unless 1 <= zone <= 60 and 0 < f < 1.
    void validate() const;
};

struct UtmPoint {
    double easting = 0.0;
    double northing = 0.0;
};

/// Krueger-series transverse Mercator, 6th order in the third flattening
/// (Karney 2011 coefficients). Sub-millimetre within the UTM zone.
class TransverseMercator {
public:
    explicit TransverseMercator(const ProjectionSpec& spec);

    /// Throws DataError for |lat| >= 84 deg or |lon| > 180 deg.
    [[nodiscard]] UtmPoint forward(double lat_deg, double lon_deg) const;
    [[nodiscard]] LonLat inverse(UtmPoint p) const;

    [[nodiscard]] const ProjectionSpec& spec() const noexcept { return spec_; }

private:
    ProjectionSpec spec_;
    double e_ = 0.0;        // first eccentricity
    double e2m_ = 0.0;      // 1 - e^2
    double scale_ = 0.0;    // k0 * rectifying radius A
    double alpha_[7] = {};  // forward series, 1-based
    double beta_[7] = {};   // inverse series, 1-based
};

[[nodiscard]] UtmPoint wgs84_to_utm(double lat_deg, double lon_deg, const ProjectionSpec& spec);
[[nodiscard]] LonLat utm_to_wgs84(UtmPoint p, const ProjectionSpec& spec);

// ---------------------------------------------------------------------------
// Centroid table and trip geolocation

struct CentroidEntry {
    std::string geoid;
    LonLat centroid;
    UtmPoint utm;
};

struct TableWarning {
    std::string geoid;
    std::string message;
};

class CentroidTable {
public:
    CentroidTable() = default;
    explicit CentroidTable(ProjectionSpec spec) : spec_(spec) {}

    /// Inserts an entry, projecting its centroid. Throws DataError on a
    /// duplicate geoid.
    void add(std::string geoid, LonLat centroid);

    /// Exact match first, then a unique match on the last six digits.
    /// Returns nullptr when unknown or when the suffix is ambiguous.
    [[nodiscard]] const CentroidEntry* resolve(std::string_view geoid) const;
    [[nodiscard]] const CentroidEntry* find_exact(std::string_view geoid) const;

    [[nodiscard]] const std::vector<CentroidEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] const ProjectionSpec& spec() const noexcept { return spec_; }

    std::vector<TableWarning> warnings;

private:
    ProjectionSpec spec_;
    std::vector<CentroidEntry> entries_;
    std::map<std::string, std::size_t, std::less<>> by_geoid_;
    std::map<std::string, std::optional<std::size_t>, std::less<>> by_suffix_;  // nullopt = ambiguous
};

/// One entry per valid polygon. Duplicate geoids are fatal; degenerate
/// polygons are skipped and recorded in `warnings`.
[[nodiscard]] CentroidTable build_centroid_table(std::span<const TractPolygon> polygons,
                                                 const ProjectionSpec& spec);

/// Reads "geoid,lon,lat" rows (header required).
[[nodiscard]] CentroidTable read_centroid_csv(std::istream& in, const ProjectionSpec& spec);
void write_centroid_csv(std::ostream& out, const CentroidTable& table);

enum class BoundaryMode {
    centroid,    // the tract centroid must lie inside the boundary
    any_vertex,  // any vertex of the tract polygon inside the boundary suffices
};

[[nodiscard]] BoundaryMode parse_boundary_mode(std::string_view name);

struct LocatedTrip {
    LocalDateTime start;
    LocalDateTime end;
    UtmPoint origin;
    UtmPoint dest;
};

struct GeolocateResult {
    std::vector<LocatedTrip> located;
    std::vector<std::size_t> kept_indices;  // positions in the input trip span
    std::size_t unresolved_geoid = 0;
    std::size_t outside_boundary = 0;
};

/// Attaches projected tract-centroid coordinates to each trip. Trips with an
/// unresolvable origin/destination GEOID, or whose tract lies outside the
/// boundary, are rejected. An empty boundary set disables the boundary test.
/// In any_vertex mode, `tracts` supplies the polygons (tracts without one
/// fall back to the centroid test).
[[nodiscard]] GeolocateResult geolocate_trips(std::span<const ingest::TripRecord> trips,
                                              const CentroidTable& table,
                                              std::span<const TractPolygon> boundary,
                                              BoundaryMode mode = BoundaryMode::centroid,
                                              std::span<const TractPolygon> tracts = {});

/// Folds geolocation rejections into a filter report.
void apply_to_report(ingest::FilterReport& report, const GeolocateResult& result);

/// Kept trips as CSV: source columns, speed, then projected coordinates.
void write_located_csv(std::ostream& out, const std::vector<std::string>& header,
                       std::span<const ingest::TripRecord> trips, const GeolocateResult& result);

/// Reads the file written by write_located_csv back into located trips.
[[nodiscard]] std::vector<LocatedTrip> read_located_csv(std::istream& in, const ingest::ColumnMap& schema);

}  // namespace gridlag::geo
