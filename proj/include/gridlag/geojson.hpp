#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gridlag/geo.hpp"

namespace gridlag::geojson {

/// Reads Polygon / MultiPolygon features from a FeatureCollection. The
/// feature name comes from `properties[geoid_key]` (strings or integers);
/// features without it get their ordinal as name. Other geometry types are
/// skipped.
[[nodiscard]] std::vector<geo::TractPolygon> read_polygons(std::istream& in, const std::string& geoid_key = "GEOID");

/// Writes one Polygon/MultiPolygon feature per area, with the name stored
/// under `geoid_key`.
void write_polygons(std::ostream& out, std::span<const geo::TractPolygon> polys,
                    const std::string& geoid_key = "GEOID");

}  // namespace gridlag::geojson
