#include "gridlag/geojson.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "gridlag/csv.hpp"

namespace gridlag::geojson {

namespace {

using nlohmann::json;

geo::Ring parse_ring(const json& coords) {
    geo::Ring ring;
    ring.reserve(coords.size());
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2) throw DataError("GeoJSON position must have two coordinates");
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    return ring;
}

geo::PolygonPart parse_polygon(const json& coords) {
    geo::PolygonPart part;
    for (const auto& ring : coords) part.rings.push_back(parse_ring(ring));
    return part;
}

json ring_json(const geo::Ring& ring) {
    json arr = json::array();
    for (const auto& p : ring) arr.push_back({p.lon, p.lat});
    return arr;
}

json part_json(const geo::PolygonPart& part) {
    json arr = json::array();
    for (const auto& r : part.rings) arr.push_back(ring_json(r));
    return arr;
}

}  // namespace

std::vector<geo::TractPolygon> read_polygons(std::istream& in, const std::string& geoid_key) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("invalid GeoJSON: {}", e.what()));
    }
    if (doc.value("type", "") != "FeatureCollection") throw DataError("GeoJSON root must be a FeatureCollection");

    std::vector<geo::TractPolygon> out;
    std::size_t ordinal = 0;
    try {
        for (const auto& feature : doc.at("features")) {
            const std::size_t index = ordinal++;
            const auto& geometry = feature.at("geometry");
            if (geometry.is_null()) continue;
            const std::string type = geometry.value("type", "");
            geo::TractPolygon poly;
            const auto props = feature.value("properties", json::object());
            if (props.is_object() && props.contains(geoid_key)) {
                const auto& v = props[geoid_key];
                poly.geoid = v.is_string() ? v.get<std::string>() : v.dump();
            } else {
                poly.geoid = std::to_string(index);
            }
            if (type == "Polygon") {
                poly.parts.push_back(parse_polygon(geometry.at("coordinates")));
            } else if (type == "MultiPolygon") {
                for (const auto& p : geometry.at("coordinates")) poly.parts.push_back(parse_polygon(p));
            } else {
                continue;
            }
            out.push_back(std::move(poly));
        }
    } catch (const json::exception& e) {
        throw DataError(fmt::format("malformed GeoJSON feature: {}", e.what()));
    }
    return out;
}

void write_polygons(std::ostream& out, std::span<const geo::TractPolygon> polys, const std::string& geoid_key) {
    json features = json::array();
    for (const auto& p : polys) {
        json geometry;
        if (p.parts.size() == 1) {
            geometry = {{"type", "Polygon"}, {"coordinates", part_json(p.parts.front())}};
        } else {
            json parts = json::array();
            for (const auto& part : p.parts) parts.push_back(part_json(part));
            geometry = {{"type", "MultiPolygon"}, {"coordinates", parts}};
        }
        features.push_back({{"type", "Feature"}, {"properties", {{geoid_key, p.geoid}}}, {"geometry", geometry}});
    }
    json doc = {{"type", "FeatureCollection"}, {"features", features}};
    out << doc.dump(1) << '\n';
}

}  // namespace gridlag::geojson
