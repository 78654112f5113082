#pragma once

#include <vector>

#include "parceldelin/geodata/tiles.hpp"
#include "parceldelin/raster/mask.hpp"

namespace parceldelin::raster {

using geodata::PixelCoord;
using PixelRing = std::vector<PixelCoord>;

struct PixelPolygon {
    PixelRing outer;
    std::vector<PixelRing> holes;
};

// Sets the 2x2 block with top-left corner (col, row), clipped to the mask.
void stamp2x2(Mask& mask, long long col, long long row);

// Stamps a 2x2 block (offsets {0,1} x {0,1}) at every pixel of the Bresenham
// line from p0 to p1, clipped to the mask.
void draw_segment_thick2(Mask& mask, PixelCoord p0, PixelCoord p1);

// Pixels visited by the integer Bresenham walk from p0 to p1 (inclusive).
std::vector<PixelCoord> bresenham_line(PixelCoord p0, PixelCoord p1);

// Draws the closed polyline through `ring`.
void draw_ring(Mask& mask, const PixelRing& ring);

// Even-odd fill sampled at pixel centers (c + 0.5, r + 0.5), counting outer
// and hole rings together; a center lying exactly on an edge is not counted as
// crossing it. Rings with zero area are skipped; returns true when any ring
// was skipped that way.
bool fill_polygon(Mask& mask, const PixelPolygon& poly);

// Removes consecutive duplicates (and a closing duplicate) from a ring.
PixelRing collapse_ring(const PixelRing& ring);

// Twice the signed area of a pixel ring (exact integer arithmetic).
long long twice_signed_area(const PixelRing& ring);

}  // namespace parceldelin::raster
