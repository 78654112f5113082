#include "parceldelin/raster/draw.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>

namespace parceldelin::raster {
namespace {

template <typename Plot>
void walk_line(PixelCoord p0, PixelCoord p1, Plot&& plot) {
    long long x = p0.col, y = p0.row;
    const long long dx = std::llabs(p1.col - x);
    const long long dy = -std::llabs(p1.row - y);
    const long long sx = x < p1.col ? 1 : -1;
    const long long sy = y < p1.row ? 1 : -1;
    long long err = dx + dy;
    while (true) {
        plot(x, y);
        if (x == p1.col && y == p1.row) break;
        const long long e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::vector<PixelCoord> bresenham_line(PixelCoord p0, PixelCoord p1) {
    std::vector<PixelCoord> out;
    walk_line(p0, p1, [&](long long x, long long y) { out.push_back({x, y}); });
    return out;
}

void stamp2x2(Mask& mask, long long col, long long row) {
    mask.set_clipped(col, row);
    mask.set_clipped(col + 1, row);
    mask.set_clipped(col, row + 1);
    mask.set_clipped(col + 1, row + 1);
}

void draw_segment_thick2(Mask& mask, PixelCoord p0, PixelCoord p1) {
    walk_line(p0, p1, [&](long long x, long long y) { stamp2x2(mask, x, y); });
}

void draw_ring(Mask& mask, const PixelRing& ring) {
    if (ring.empty()) return;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        draw_segment_thick2(mask, ring[i], ring[(i + 1) % ring.size()]);
    }
}

PixelRing collapse_ring(const PixelRing& ring) {
    PixelRing out;
    out.reserve(ring.size());
    for (const auto& p : ring) {
        if (out.empty() || !(out.back() == p)) out.push_back(p);
    }
    while (out.size() > 1 && out.front() == out.back()) out.pop_back();
    return out;
}

long long twice_signed_area(const PixelRing& ring) {
    long long a = 0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& p = ring[i];
        const auto& q = ring[(i + 1) % ring.size()];
        a += p.col * q.row - q.col * p.row;
    }
    return a;
}

bool fill_polygon(Mask& mask, const PixelPolygon& poly) {
    struct Edge {
        long long x0, y0, x1, y1;
    };
    std::vector<Edge> edges;
    bool skipped = false;
    long long ymin = std::numeric_limits<long long>::max();
    long long ymax = std::numeric_limits<long long>::min();
    auto add_ring = [&](const PixelRing& ring) {
        if (ring.size() < 3 || twice_signed_area(ring) == 0) {
            skipped = true;
            return;
        }
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const auto& p = ring[i];
            const auto& q = ring[(i + 1) % ring.size()];
            if (p.row == q.row) continue;  // horizontal edges never cross a center row
            ymin = std::min({ymin, p.row, q.row});
            ymax = std::max({ymax, p.row, q.row});
            edges.push_back(Edge{p.col, p.row, q.col, q.row});
        }
    };
    add_ring(poly.outer);
    if (skipped) return true;  // no outer ring, nothing to fill
    for (const auto& h : poly.holes) add_ring(h);

    if (edges.empty()) return skipped;
    const long long W = mask.width();
    const long long r_lo = std::max<long long>(0, ymin);
    const long long r_hi = std::min<long long>(mask.height() - 1, ymax);
    std::vector<long long> starts;
    for (long long r = r_lo; r <= r_hi; ++r) {
        // Center row y = r + 0.5 (doubled: 2r + 1) never equals a vertex row.
        const long long y2 = 2 * r + 1;
        starts.clear();
        for (const auto& e : edges) {
            if ((2 * e.y0 < y2) == (2 * e.y1 < y2)) continue;
            long long dy = e.y1 - e.y0;
            // First column whose center lies strictly right of the crossing.
            long long num = (2 * e.x0 - 1) * dy + (y2 - 2 * e.y0) * (e.x1 - e.x0);
            if (dy < 0) {
                num = -num;
                dy = -dy;
            }
            starts.push_back(floor_div(num, 2 * dy) + 1);
        }
        std::sort(starts.begin(), starts.end());
        for (std::size_t k = 0; k + 1 < starts.size(); k += 2) {
            const long long c0 = std::max<long long>(0, starts[k]);
            const long long c1 = std::min<long long>(W, starts[k + 1]);
            for (long long c = c0; c < c1; ++c) mask.set(static_cast<int>(c), static_cast<int>(r));
        }
    }
    return skipped;
}

}  // namespace parceldelin::raster
