#pragma once

#include <span>

#include "parceldelin/geodata/types.hpp"

namespace parceldelin::geodata {

// Drops a closing vertex equal to the first and any consecutive duplicates,
// then checks the ring has at least three distinct vertices and no NaNs.
// Throws DegenerateGeometryError (too few vertices) or DomainError (NaN).
GeoRing normalize_ring(GeoRing ring);

// Signed shoelace area in (lon, lat) degree units; positive = counterclockwise.
double signed_area(std::span<const GeoPoint> ring);

// Area-weighted centroid of the outer ring minus its holes.
// Throws DegenerateGeometryError for zero net area.
GeoPoint centroid(const PolygonGeo& poly);

BBox polygon_bbox(const PolygonGeo& poly);

}  // namespace parceldelin::geodata
