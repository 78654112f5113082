#include "parceldelin/raster/render.hpp"

namespace parceldelin::raster {
namespace {

PixelRing project_ring(const geodata::TileFootprint& tile, const geodata::GeoRing& ring, int size_px) {
    PixelRing out;
    out.reserve(ring.size());
    for (const auto& g : ring) out.push_back(geodata::geo_to_pixel(tile, g, size_px));
    return collapse_ring(out);
}

}  // namespace

std::optional<PixelPolygon> project_polygon(const geodata::TileFootprint& tile, const geodata::PolygonGeo& poly,
                                            int size_px) {
    PixelPolygon out;
    out.outer = project_ring(tile, poly.outer, size_px);
    if (out.outer.size() < 3) return std::nullopt;
    for (const auto& h : poly.holes) {
        auto ring = project_ring(tile, h, size_px);
        if (ring.size() >= 3) out.holes.push_back(std::move(ring));
    }
    return out;
}

Mask render_boundary_mask(const geodata::TileFootprint& tile, std::span<const geodata::ParcelRecord> parcels,
                          int size_px) {
    Mask mask(size_px, size_px);
    for (const auto& p : parcels) {
        // Rings that collapse to a point or a segment are still drawn.
        draw_ring(mask, project_ring(tile, p.polygon.outer, size_px));
        for (const auto& h : p.polygon.holes) draw_ring(mask, project_ring(tile, h, size_px));
    }
    return mask;
}

Mask render_area_mask(const geodata::TileFootprint& tile, std::span<const geodata::ParcelRecord> parcels,
                      int size_px) {
    Mask out(size_px, size_px);
    for (const auto& p : parcels) {
        const auto poly = project_polygon(tile, p.polygon, size_px);
        if (!poly) continue;
        Mask one(size_px, size_px);
        fill_polygon(one, *poly);
        out.merge(one);
    }
    return out;
}

}  // namespace parceldelin::raster
