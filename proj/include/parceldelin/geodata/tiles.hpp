#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "parceldelin/geodata/types.hpp"

namespace parceldelin::geodata {

// Meters per degree of latitude in the local equirectangular approximation.
inline constexpr double kMetersPerDegree = 111320.0;

// Square of side `side_m` around `center`: dlat = (side/2)/111320,
// dlon = dlat / cos(lat). Throws DomainError for |lat| >= 85.
BBox tile_bbox(const GeoPoint& center, double side_m = kTileSideMeters);

TileFootprint make_tile(int tile_id, const GeoPoint& center, double side_m = kTileSideMeters);

// Draws parcels uniformly with replacement (seeded) and proposes a footprint
// at each drawn parcel's centroid; a proposal is rejected when its bbox
// intersects an accepted one. Throws CapacityError (carrying the accepted
// count) if `max_attempts` draws do not yield `n` footprints.
std::vector<TileFootprint> sample_tile_centers(std::span<const ParcelRecord> parcels, std::size_t n,
                                               std::uint64_t seed, std::size_t max_attempts);

// Parcels whose polygon bbox intersects the tile bbox. No clipping.
std::vector<ParcelRecord> filter_parcels(std::span<const ParcelRecord> parcels, const TileFootprint& tile);

struct PixelCoord {
    long long col = 0;
    long long row = 0;

    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

// Linear scaling of the tile bbox onto a size_px grid; row grows southward.
// Rounds to nearest with ties to even; out-of-tile points map outside
// [0, size_px).
PixelCoord geo_to_pixel(const TileFootprint& tile, const GeoPoint& g, int size_px);

}  // namespace parceldelin::geodata
