#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "parceldelin/geodata/types.hpp"

namespace parceldelin::geodata {

// Planar Polygon record exactly as stored in an ESRI .shp file.
struct ShapePoint {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const ShapePoint&, const ShapePoint&) = default;
};

struct ShapePolygon {
    std::int32_t record_number = 0;
    std::vector<std::vector<ShapePoint>> rings;  // closed, as in the file

    friend bool operator==(const ShapePolygon&, const ShapePolygon&) = default;
};

struct ShapefileBytes {
    std::vector<std::uint8_t> main;   // .shp
    std::vector<std::uint8_t> index;  // .shx
};

inline constexpr std::int32_t kShapefileCode = 9994;
inline constexpr std::int32_t kShapefileVersion = 1000;
inline constexpr std::int32_t kShapeTypeNull = 0;
inline constexpr std::int32_t kShapeTypePolygon = 5;

// Decodes every Polygon record; null-shape records are skipped. When an index
// is supplied, record positions are taken from it.
// Throws FormatError (bad magic, truncation, inconsistent lengths; message
// names the record index) or UnsupportedFeatureError (shape type != 5).
std::vector<ShapePolygon> read_shapefile_polygons(std::span<const std::uint8_t> main,
                                                  std::optional<std::span<const std::uint8_t>> index = {});

ShapefileBytes write_shapefile_polygons(std::span<const ShapePolygon> polygons);

// Polygon records in Lambert-93 meters -> ParcelRecords in degrees. Rings with
// negative shoelace area (clockwise) start a new parcel; counterclockwise rings
// are holes of the preceding parcel. Ids are assigned sequentially; source_id
// is the 0-based position of the originating shape record.
std::vector<ParcelRecord> parse_shapefile(std::span<const std::uint8_t> main,
                                          std::optional<std::span<const std::uint8_t>> index = {});

// Writes one Polygon record per parcel (outer clockwise, holes counterclockwise,
// rings closed), projecting to Lambert-93.
ShapefileBytes write_shapefile(std::span<const ParcelRecord> parcels);

}  // namespace parceldelin::geodata
