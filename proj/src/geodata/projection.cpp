#include "parceldelin/geodata/projection.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "parceldelin/common/error.hpp"

namespace parceldelin::geodata {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct ConeConstants {
    double e;   // first eccentricity
    double n;   // cone constant
    double aF;  // a * F
    double r0;  // radius at the latitude of origin
};

double m_of(double phi, double e) {
    const double s = std::sin(phi);
    return std::cos(phi) / std::sqrt(1.0 - e * e * s * s);
}

double t_of(double phi, double e) {
    const double s = std::sin(phi);
    return std::tan(std::numbers::pi / 4.0 - phi / 2.0) / std::pow((1.0 - e * s) / (1.0 + e * s), e / 2.0);
}

const ConeConstants& cone() {
    static const ConeConstants c = [] {
        using L = Lambert93;
        const double f = 1.0 / L::inverse_flattening;
        const double e = std::sqrt(2.0 * f - f * f);
        const double phi1 = L::std_parallel_1_deg * kDeg;
        const double phi2 = L::std_parallel_2_deg * kDeg;
        const double m1 = m_of(phi1, e), m2 = m_of(phi2, e);
        const double t1 = t_of(phi1, e), t2 = t_of(phi2, e);
        const double n = (std::log(m1) - std::log(m2)) / (std::log(t1) - std::log(t2));
        const double F = m1 / (n * std::pow(t1, n));
        const double aF = L::semi_major_m * F;
        const double r0 = aF * std::pow(t_of(L::lat_origin_deg * kDeg, e), n);
        return ConeConstants{e, n, aF, r0};
    }();
    return c;
}

}  // namespace

LambertPoint wgs84_to_lambert93(const GeoPoint& g) {
    if (!std::isfinite(g.lon_deg) || !std::isfinite(g.lat_deg)) {
        throw DomainError("wgs84_to_lambert93: non-finite coordinate");
    }
    if (!(g.lat_deg > -90.0 && g.lat_deg < 90.0)) {
        std::ostringstream os;
        os << "wgs84_to_lambert93: latitude " << g.lat_deg << " is at or beyond a pole";
        throw DomainError(os.str());
    }
    if (g.lon_deg < -180.0 || g.lon_deg > 180.0) {
        std::ostringstream os;
        os << "wgs84_to_lambert93: longitude " << g.lon_deg << " outside [-180, 180]";
        throw DomainError(os.str());
    }
    const auto& c = cone();
    const double r = c.aF * std::pow(t_of(g.lat_deg * kDeg, c.e), c.n);
    const double theta = c.n * (g.lon_deg - Lambert93::lon_origin_deg) * kDeg;
    return LambertPoint{Lambert93::false_easting_m + r * std::sin(theta),
                        Lambert93::false_northing_m + c.r0 - r * std::cos(theta)};
}

GeoPoint lambert93_to_wgs84(const LambertPoint& p) {
    using L = Lambert93;
    if (!std::isfinite(p.easting_m) || !std::isfinite(p.northing_m)) {
        throw DomainError("lambert93_to_wgs84: non-finite coordinate");
    }
    if (p.easting_m < L::easting_min_m || p.easting_m > L::easting_max_m) {
        std::ostringstream os;
        os.precision(12);
        os << "lambert93_to_wgs84: easting " << p.easting_m << " m outside [" << L::easting_min_m << ", "
           << L::easting_max_m << "]";
        throw DomainError(os.str());
    }
    if (p.northing_m < L::northing_min_m || p.northing_m > L::northing_max_m) {
        std::ostringstream os;
        os.precision(12);
        os << "lambert93_to_wgs84: northing " << p.northing_m << " m outside [" << L::northing_min_m << ", "
           << L::northing_max_m << "]";
        throw DomainError(os.str());
    }
    const auto& c = cone();
    const double dx = p.easting_m - L::false_easting_m;
    const double dy = c.r0 - (p.northing_m - L::false_northing_m);
    const double r = std::copysign(std::hypot(dx, dy), c.n);
    const double t = std::pow(r / c.aF, 1.0 / c.n);
    const double theta = std::atan2(dx, dy);
    const double lon = theta / c.n + L::lon_origin_deg * kDeg;

    // Fixed-point iteration for the conformal latitude; converges to double
    // precision in well under 15 steps inside the validity box.
    double phi = std::numbers::pi / 2.0 - 2.0 * std::atan(t);
    for (int i = 0; i < 30; ++i) {
        const double s = std::sin(phi);
        const double next =
            std::numbers::pi / 2.0 - 2.0 * std::atan(t * std::pow((1.0 - c.e * s) / (1.0 + c.e * s), c.e / 2.0));
        if (std::abs(next - phi) < 1e-15) {
            phi = next;
            break;
        }
        phi = next;
    }
    return GeoPoint{lon / kDeg, phi / kDeg};
}

}  // namespace parceldelin::geodata
