#pragma once

#include <optional>
#include <span>

#include "parceldelin/geodata/types.hpp"
#include "parceldelin/raster/draw.hpp"

namespace parceldelin::raster {

// Projects a parcel into the tile's pixel grid. Vertices outside the tile are
// kept. Returns nullopt when the outer ring collapses below 3 vertices; holes
// that collapse are dropped.
std::optional<PixelPolygon> project_polygon(const geodata::TileFootprint& tile, const geodata::PolygonGeo& poly,
                                            int size_px);

// Every ring of every parcel drawn closed with the 2-pixel stamp.
Mask render_boundary_mask(const geodata::TileFootprint& tile, std::span<const geodata::ParcelRecord> parcels,
                          int size_px);

// Union of the filled parcels.
Mask render_area_mask(const geodata::TileFootprint& tile, std::span<const geodata::ParcelRecord> parcels,
                      int size_px);

}  // namespace parceldelin::raster
