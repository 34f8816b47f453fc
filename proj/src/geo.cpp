#include "gridlag/geo.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "gridlag/csv.hpp"

namespace gridlag::geo {

namespace {

double cross(LonLat o, LonLat a, LonLat b) noexcept {
    return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool on_segment(LonLat p, LonLat a, LonLat b) noexcept {
    const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
    const double scale = std::max({1.0, std::abs(a.lon), std::abs(a.lat), std::abs(p.lon), std::abs(p.lat)});
    if (std::abs(cross(a, b, p)) > 1e-12 * scale * std::max(len, 1e-300)) return false;
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
           p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

bool on_ring(LonLat p, const Ring& ring) noexcept {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        if (on_segment(p, ring[i], ring[i + 1])) return true;
    return false;
}

int winding_number(LonLat p, const Ring& ring) noexcept {
    int wn = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const LonLat& a = ring[i];
        const LonLat& b = ring[i + 1];
        if (a.lat <= p.lat) {
            if (b.lat > p.lat && cross(a, b, p) > 0) ++wn;
        } else if (b.lat <= p.lat && cross(a, b, p) < 0) {
            --wn;
        }
    }
    return wn;
}

bool part_contains(LonLat p, const PolygonPart& part) noexcept {
    if (part.rings.empty()) return false;
    for (const auto& ring : part.rings)
        if (on_ring(p, ring)) return true;
    if (winding_number(p, part.rings.front()) == 0) return false;
    for (std::size_t h = 1; h < part.rings.size(); ++h)
        if (winding_number(p, part.rings[h]) != 0) return false;
    return true;
}

}  // namespace

double signed_area(const Ring& ring) noexcept {
    if (ring.size() < 2) return 0.0;
    const LonLat o = ring.front();
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double x0 = ring[i].lon - o.lon, y0 = ring[i].lat - o.lat;
        const double x1 = ring[i + 1].lon - o.lon, y1 = ring[i + 1].lat - o.lat;
        twice += x0 * y1 - x1 * y0;
    }
    return 0.5 * twice;
}

void validate(const TractPolygon& poly) {
    if (poly.parts.empty()) throw DataError(fmt::format("polygon '{}' has no rings", poly.geoid));
    for (const auto& part : poly.parts) {
        if (part.rings.empty()) throw DataError(fmt::format("polygon '{}' has an empty part", poly.geoid));
        for (const auto& ring : part.rings) {
            if (ring.size() < 4)
                throw DataError(fmt::format("polygon '{}': ring has {} vertices (need >= 4)", poly.geoid,
                                            ring.size()));
            if (!(ring.front() == ring.back()))
                throw DataError(fmt::format("polygon '{}': ring is not closed", poly.geoid));
        }
        if (signed_area(part.rings.front()) == 0.0)
            throw DegeneratePolygonError(fmt::format("polygon '{}': exterior ring has zero area", poly.geoid));
    }
}

LonLat polygon_centroid(const TractPolygon& poly) {
    validate(poly);
    const LonLat o = poly.parts.front().rings.front().front();
    double area = 0.0, mx = 0.0, my = 0.0;
    double min_x = o.lon, max_x = o.lon, min_y = o.lat, max_y = o.lat;
    for (const auto& part : poly.parts) {
        for (std::size_t k = 0; k < part.rings.size(); ++k) {
            const Ring& ring = part.rings[k];
            double a = 0.0, x = 0.0, y = 0.0;
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                const double x0 = ring[i].lon - o.lon, y0 = ring[i].lat - o.lat;
                const double x1 = ring[i + 1].lon - o.lon, y1 = ring[i + 1].lat - o.lat;
                const double c = x0 * y1 - x1 * y0;
                a += c;
                x += (x0 + x1) * c;
                y += (y0 + y1) * c;
                min_x = std::min(min_x, ring[i].lon);
                max_x = std::max(max_x, ring[i].lon);
                min_y = std::min(min_y, ring[i].lat);
                max_y = std::max(max_y, ring[i].lat);
            }
            // Exterior rings add, holes subtract, whatever their winding.
            const double s = (k == 0 ? 1.0 : -1.0) * (a < 0 ? -1.0 : 1.0);
            area += s * a / 2.0;
            mx += s * x / 6.0;
            my += s * y / 6.0;
        }
    }
    const double box = (max_x - min_x) * (max_y - min_y);
    if (!(std::abs(area) > 1e-12 * box) || area == 0.0)
        throw DegeneratePolygonError(fmt::format("polygon '{}' has zero net area", poly.geoid));
    return {o.lon + mx / area, o.lat + my / area};
}

bool point_in_polygon(LonLat pt, const TractPolygon& poly) noexcept {
    return std::any_of(poly.parts.begin(), poly.parts.end(),
                       [&](const PolygonPart& part) { return part_contains(pt, part); });
}

bool point_in_any(LonLat pt, std::span<const TractPolygon> polys) noexcept {
    return std::any_of(polys.begin(), polys.end(), [&](const TractPolygon& p) { return point_in_polygon(pt, p); });
}

// ---------------------------------------------------------------------------

void CentroidTable::add(std::string geoid, LonLat centroid) {
    if (by_geoid_.contains(geoid)) throw DataError(fmt::format("duplicate GEOID '{}'", geoid));
    CentroidEntry e{geoid, centroid, wgs84_to_utm(centroid.lat, centroid.lon, spec_)};
    const std::size_t idx = entries_.size();
    by_geoid_.emplace(geoid, idx);
    if (geoid.size() >= 6) {
        auto suffix = geoid.substr(geoid.size() - 6);
        auto [it, inserted] = by_suffix_.emplace(suffix, idx);
        if (!inserted) it->second.reset();
    }
    entries_.push_back(std::move(e));
}

const CentroidEntry* CentroidTable::find_exact(std::string_view geoid) const {
    auto it = by_geoid_.find(geoid);
    return it == by_geoid_.end() ? nullptr : &entries_[it->second];
}

const CentroidEntry* CentroidTable::resolve(std::string_view geoid) const {
    if (const auto* e = find_exact(geoid)) return e;
    if (geoid.size() < 6) return nullptr;
    auto it = by_suffix_.find(geoid.substr(geoid.size() - 6));
    if (it == by_suffix_.end() || !it->second) return nullptr;
    return &entries_[*it->second];
}

CentroidTable build_centroid_table(std::span<const TractPolygon> polygons, const ProjectionSpec& spec) {
    spec.validate();
    CentroidTable table(spec);
    for (const auto& poly : polygons) {
        if (table.find_exact(poly.geoid)) throw DataError(fmt::format("duplicate GEOID '{}'", poly.geoid));
        LonLat c;
        try {
            c = polygon_centroid(poly);
        } catch (const DegeneratePolygonError& e) {
            table.warnings.push_back({poly.geoid, e.what()});
            continue;
        }
        table.add(poly.geoid, c);
    }
    return table;
}

CentroidTable read_centroid_csv(std::istream& in, const ProjectionSpec& spec) {
    spec.validate();
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) throw DataError("centroid CSV is empty");
    auto col = [&](std::string_view name) {
        auto it = std::find(row.begin(), row.end(), name);
        if (it == row.end()) throw DataError(fmt::format("centroid CSV lacks column '{}'", name));
        return static_cast<std::size_t>(it - row.begin());
    };
    const std::size_t ig = col("geoid"), ilon = col("lon"), ilat = col("lat");
    CentroidTable table(spec);
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() <= std::max({ig, ilon, ilat}))
            throw DataError(fmt::format("centroid CSV line {}: too few fields", reader.line()));
        try {
            table.add(row[ig], {std::stod(row[ilon]), std::stod(row[ilat])});
        } catch (const std::logic_error&) {
            throw DataError(fmt::format("centroid CSV line {}: bad coordinate", reader.line()));
        }
    }
    return table;
}

void write_centroid_csv(std::ostream& out, const CentroidTable& table) {
    out << "geoid,lon,lat,easting,northing\n";
    for (const auto& e : table.entries())
        csv::write_row(out, {e.geoid, csv::num(e.centroid.lon), csv::num(e.centroid.lat), csv::num(e.utm.easting),
                             csv::num(e.utm.northing)});
}

BoundaryMode parse_boundary_mode(std::string_view name) {
    if (name == "centroid") return BoundaryMode::centroid;
    if (name == "any-vertex" || name == "any_vertex") return BoundaryMode::any_vertex;
    throw ConfigError(fmt::format("unknown boundary mode '{}' (expected centroid|any-vertex)", name));
}

GeolocateResult geolocate_trips(std::span<const ingest::TripRecord> trips, const CentroidTable& table,
                                std::span<const TractPolygon> boundary, BoundaryMode mode,
                                std::span<const TractPolygon> tracts) {
    std::unordered_map<std::string, const TractPolygon*> polygon_of;
    if (mode == BoundaryMode::any_vertex)
        for (const auto& t : tracts) polygon_of.emplace(t.geoid, &t);

    std::unordered_map<const CentroidEntry*, bool> inside_cache;
    auto inside = [&](const CentroidEntry* e) {
        if (boundary.empty()) return true;
        auto [it, fresh] = inside_cache.emplace(e, false);
        if (!fresh) return it->second;
        bool in = false;
        auto poly = polygon_of.find(e->geoid);
        if (mode == BoundaryMode::any_vertex && poly != polygon_of.end()) {
            for (const auto& part : poly->second->parts)
                for (const auto& ring : part.rings)
                    for (const auto& v : ring)
                        if (!in && point_in_any(v, boundary)) in = true;
        } else {
            in = point_in_any(e->centroid, boundary);
        }
        it->second = in;
        return in;
    };

    GeolocateResult out;
    for (std::size_t i = 0; i < trips.size(); ++i) {
        const auto& t = trips[i];
        const CentroidEntry* o = table.resolve(t.origin_geoid);
        const CentroidEntry* d = table.resolve(t.dest_geoid);
        if (!o || !d) {
            ++out.unresolved_geoid;
            continue;
        }
        if (!inside(o) || !inside(d)) {
            ++out.outside_boundary;
            continue;
        }
        out.located.push_back({t.start, t.end, o->utm, d->utm});
        out.kept_indices.push_back(i);
    }
    return out;
}

void apply_to_report(ingest::FilterReport& report, const GeolocateResult& result) {
    report.move_kept_to(ingest::RejectReason::unresolved_geoid, result.unresolved_geoid);
    report.move_kept_to(ingest::RejectReason::outside_boundary, result.outside_boundary);
}

void write_located_csv(std::ostream& out, const std::vector<std::string>& header,
                       std::span<const ingest::TripRecord> trips, const GeolocateResult& result) {
    auto h = header;
    for (const char* extra : {"speed_kmh", "origin_easting", "origin_northing", "dest_easting", "dest_northing"})
        h.emplace_back(extra);
    csv::write_row(out, h);
    for (std::size_t k = 0; k < result.located.size(); ++k) {
        const auto& trip = trips[result.kept_indices[k]];
        const auto& loc = result.located[k];
        auto row = trip.cells;
        row.push_back(csv::num(trip.speed_kmh));
        row.push_back(csv::num(loc.origin.easting));
        row.push_back(csv::num(loc.origin.northing));
        row.push_back(csv::num(loc.dest.easting));
        row.push_back(csv::num(loc.dest.northing));
        csv::write_row(out, row);
    }
}

std::vector<LocatedTrip> read_located_csv(std::istream& in, const ingest::ColumnMap& schema) {
    csv::Reader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw DataError("located trip file is empty");
    auto col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw DataError(fmt::format("located trip file lacks column '{}'", name));
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t is = col(schema.start_time), ie = col(schema.end_time);
    const std::size_t ox = col("origin_easting"), oy = col("origin_northing");
    const std::size_t dx = col("dest_easting"), dy = col("dest_northing");

    std::vector<LocatedTrip> out;
    std::vector<std::string> row;
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != header.size())
            throw DataError(fmt::format("located trip file line {}: wrong field count", reader.line()));
        auto s = parse_timestamp(row[is]);
        auto e = parse_timestamp(row[ie]);
        if (!s || !e) throw DataError(fmt::format("located trip file line {}: bad timestamp", reader.line()));
        try {
            out.push_back({*s, *e, {std::stod(row[ox]), std::stod(row[oy])}, {std::stod(row[dx]), std::stod(row[dy])}});
        } catch (const std::logic_error&) {
            throw DataError(fmt::format("located trip file line {}: bad coordinate", reader.line()));
        }
    }
    return out;
}

}  // namespace gridlag::geo
