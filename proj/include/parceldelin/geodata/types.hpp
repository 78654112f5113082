#pragma once

#include <cstdint>
#include <vector>

namespace parceldelin::geodata {

// Geographic coordinate in degrees (RGF93 / WGS84 are treated as identical).
struct GeoPoint {
    double lon_deg = 0.0;
    double lat_deg = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Lambert-93 projected coordinate in meters.
struct LambertPoint {
    double easting_m = 0.0;
    double northing_m = 0.0;

    friend bool operator==(const LambertPoint&, const LambertPoint&) = default;
};

using GeoRing = std::vector<GeoPoint>;

// Rings are stored open: the closing vertex repeating the first one is dropped.
struct PolygonGeo {
    GeoRing outer;
    std::vector<GeoRing> holes;

    friend bool operator==(const PolygonGeo&, const PolygonGeo&) = default;
};

struct ParcelRecord {
    std::int64_t id = 0;
    // Index of the source feature (shapefile record number or GeoJSON feature);
    // multi-part features yield several records sharing this value.
    std::int64_t source_id = 0;
    PolygonGeo polygon;

    friend bool operator==(const ParcelRecord&, const ParcelRecord&) = default;
};

struct BBox {
    double lon_min = 0.0;
    double lat_min = 0.0;
    double lon_max = 0.0;
    double lat_max = 0.0;

    // Closed-interval overlap; boxes sharing only an edge intersect.
    bool intersects(const BBox& o) const {
        return lon_min <= o.lon_max && o.lon_min <= lon_max && lat_min <= o.lat_max && o.lat_min <= lat_max;
    }
    bool contains(const GeoPoint& p) const {
        return p.lon_deg >= lon_min && p.lon_deg <= lon_max && p.lat_deg >= lat_min && p.lat_deg <= lat_max;
    }

    friend bool operator==(const BBox&, const BBox&) = default;
};

inline constexpr double kTileSideMeters = 2240.0;

struct TileFootprint {
    int tile_id = 0;
    GeoPoint center;
    double side_m = kTileSideMeters;
    BBox bbox_deg;
};

}  // namespace parceldelin::geodata
