#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "parceldelin/geodata/types.hpp"

namespace parceldelin::geodata {

// FeatureCollection of Polygon / MultiPolygon features in lon/lat degrees.
// The first ring of each polygon is its outer ring, the rest are holes. Each
// part of a MultiPolygon becomes its own record; source_id is the feature's
// position in the collection.
// Throws FormatError for malformed JSON or structure, UnsupportedFeatureError
// for other geometry types.
std::vector<ParcelRecord> parse_geojson_polygons(std::string_view text);

std::string write_geojson_polygons(const std::vector<ParcelRecord>& parcels);

}  // namespace parceldelin::geodata
