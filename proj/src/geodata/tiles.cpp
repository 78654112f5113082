#include "parceldelin/geodata/tiles.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "parceldelin/common/error.hpp"
#include "parceldelin/common/rng.hpp"
#include "parceldelin/geodata/polygon.hpp"

namespace parceldelin::geodata {

BBox tile_bbox(const GeoPoint& center, double side_m) {
    if (!(std::abs(center.lat_deg) < 85.0)) {
        std::ostringstream os;
        os << "tile_bbox: latitude " << center.lat_deg << " too close to a pole (|lat| must be < 85)";
        throw DomainError(os.str());
    }
    const double dlat = (side_m / 2.0) / kMetersPerDegree;
    const double dlon = (side_m / 2.0) / (kMetersPerDegree * std::cos(center.lat_deg * std::numbers::pi / 180.0));
    return BBox{center.lon_deg - dlon, center.lat_deg - dlat, center.lon_deg + dlon, center.lat_deg + dlat};
}

TileFootprint make_tile(int tile_id, const GeoPoint& center, double side_m) {
    return TileFootprint{tile_id, center, side_m, tile_bbox(center, side_m)};
}

std::vector<TileFootprint> sample_tile_centers(std::span<const ParcelRecord> parcels, std::size_t n,
                                               std::uint64_t seed, std::size_t max_attempts) {
    if (parcels.empty()) throw ConfigError("sample_tile_centers: no parcels to sample from");
    if (n == 0) throw ConfigError("sample_tile_centers: n must be >= 1");
    Rng rng(seed);
    std::vector<TileFootprint> accepted;
    accepted.reserve(n);
    for (std::size_t attempt = 0; attempt < max_attempts && accepted.size() < n; ++attempt) {
        const auto& parcel = parcels[rng.uniform_index(parcels.size())];
        GeoPoint c;
        BBox box;
        try {
            c = centroid(parcel.polygon);
            box = tile_bbox(c);
        } catch (const DegenerateGeometryError&) {
            continue;
        } catch (const DomainError&) {
            continue;
        }
        bool overlaps = false;
        for (const auto& t : accepted) {
            if (t.bbox_deg.intersects(box)) {
                overlaps = true;
                break;
            }
        }
        if (overlaps) continue;
        accepted.push_back(TileFootprint{static_cast<int>(accepted.size()), c, kTileSideMeters, box});
    }
    if (accepted.size() < n) {
        std::ostringstream os;
        os << "sample_tile_centers: accepted only " << accepted.size() << " of " << n
           << " non-overlapping tiles after " << max_attempts << " attempts";
        throw CapacityError(os.str(), accepted.size());
    }
    return accepted;
}

std::vector<ParcelRecord> filter_parcels(std::span<const ParcelRecord> parcels, const TileFootprint& tile) {
    std::vector<ParcelRecord> out;
    for (const auto& p : parcels) {
        if (polygon_bbox(p.polygon).intersects(tile.bbox_deg)) out.push_back(p);
    }
    return out;
}

PixelCoord geo_to_pixel(const TileFootprint& tile, const GeoPoint& g, int size_px) {
    const auto& b = tile.bbox_deg;
    const double span = static_cast<double>(size_px - 1);
    const double col = (g.lon_deg - b.lon_min) / (b.lon_max - b.lon_min) * span;
    const double row = (b.lat_max - g.lat_deg) / (b.lat_max - b.lat_min) * span;
    // nearbyint honors the default round-to-nearest-even mode.
    return PixelCoord{static_cast<long long>(std::nearbyint(col)), static_cast<long long>(std::nearbyint(row))};
}

}  // namespace parceldelin::geodata
