#pragma once

#include "parceldelin/geodata/types.hpp"

namespace parceldelin::geodata {

// Lambert-93 (EPSG:2154): Lambert conformal conic with two standard parallels
// on the GRS80 ellipsoid.
struct Lambert93 {
    static constexpr double semi_major_m = 6378137.0;
    static constexpr double inverse_flattening = 298.257222101;
    static constexpr double lat_origin_deg = 46.5;
    static constexpr double lon_origin_deg = 3.0;
    static constexpr double std_parallel_1_deg = 44.0;
    static constexpr double std_parallel_2_deg = 49.0;
    static constexpr double false_easting_m = 700000.0;
    static constexpr double false_northing_m = 6600000.0;

    // Accepted input region for the inverse.
    static constexpr double easting_min_m = 0.0;
    static constexpr double easting_max_m = 1300000.0;
    static constexpr double northing_min_m = 6000000.0;
    static constexpr double northing_max_m = 7200000.0;
};

// Throws DomainError for non-finite input or points outside the validity box.
GeoPoint lambert93_to_wgs84(const LambertPoint& p);

// Throws DomainError at or beyond the poles or for non-finite input.
LambertPoint wgs84_to_lambert93(const GeoPoint& g);

}  // namespace parceldelin::geodata
