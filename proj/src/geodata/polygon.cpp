#include "parceldelin/geodata/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include "parceldelin/common/error.hpp"

namespace parceldelin::geodata {

GeoRing normalize_ring(GeoRing ring) {
    for (const auto& p : ring) {
        if (std::isnan(p.lon_deg) || std::isnan(p.lat_deg)) {
            throw DomainError("polygon ring contains a NaN coordinate");
        }
    }
    GeoRing out;
    out.reserve(ring.size());
    for (const auto& p : ring) {
        if (out.empty() || !(out.back() == p)) out.push_back(p);
    }
    while (out.size() > 1 && out.front() == out.back()) out.pop_back();
    std::set<std::pair<double, double>> distinct;
    for (const auto& p : out) distinct.emplace(p.lon_deg, p.lat_deg);
    if (distinct.size() < 3) {
        throw DegenerateGeometryError("polygon ring has fewer than 3 distinct vertices");
    }
    return out;
}

double signed_area(std::span<const GeoPoint> ring) {
    if (ring.size() < 3) return 0.0;
    // Shifted to the first vertex to limit cancellation.
    const double x0 = ring[0].lon_deg, y0 = ring[0].lat_deg;
    double twice = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[(i + 1) % ring.size()];
        twice += (a.lon_deg - x0) * (b.lat_deg - y0) - (b.lon_deg - x0) * (a.lat_deg - y0);
    }
    return twice / 2.0;
}

namespace {

// Accumulates area (sign-normalized) and first moments of one ring relative
// to a shared origin.
void ring_moments(const GeoRing& ring, double x0, double y0, double sign, double& area, double& mx,
                  double& my) {
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const double xa = ring[i].lon_deg - x0, ya = ring[i].lat_deg - y0;
        const auto& nb = ring[(i + 1) % ring.size()];
        const double xb = nb.lon_deg - x0, yb = nb.lat_deg - y0;
        const double cross = xa * yb - xb * ya;
        a2 += cross;
        cx += (xa + xb) * cross;
        cy += (ya + yb) * cross;
    }
    // Orient every ring so its own area is positive, then apply `sign`.
    const double orient = a2 < 0.0 ? -1.0 : 1.0;
    area += sign * orient * a2 / 2.0;
    mx += sign * orient * cx / 6.0;
    my += sign * orient * cy / 6.0;
}

}  // namespace

GeoPoint centroid(const PolygonGeo& poly) {
    if (poly.outer.size() < 3) {
        throw DegenerateGeometryError("centroid: outer ring has fewer than 3 vertices");
    }
    const double x0 = poly.outer[0].lon_deg, y0 = poly.outer[0].lat_deg;
    double area = 0.0, mx = 0.0, my = 0.0;
    ring_moments(poly.outer, x0, y0, 1.0, area, mx, my);
    for (const auto& h : poly.holes) ring_moments(h, x0, y0, -1.0, area, mx, my);
    double scale = 0.0;
    for (const auto& p : poly.outer) {
        scale = std::max({scale, std::abs(p.lon_deg - x0), std::abs(p.lat_deg - y0)});
    }
    if (!(std::abs(area) > 1e-12 * scale * scale) || !std::isfinite(area)) {
        throw DegenerateGeometryError("centroid: polygon has zero area");
    }
    return GeoPoint{x0 + mx / area, y0 + my / area};
}

BBox polygon_bbox(const PolygonGeo& poly) {
    BBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : poly.outer) {
        b.lon_min = std::min(b.lon_min, p.lon_deg);
        b.lat_min = std::min(b.lat_min, p.lat_deg);
        b.lon_max = std::max(b.lon_max, p.lon_deg);
        b.lat_max = std::max(b.lat_max, p.lat_deg);
    }
    return b;
}

}  // namespace parceldelin::geodata
