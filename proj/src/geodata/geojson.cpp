#include "parceldelin/geodata/geojson.hpp"

#include <json.hpp>

#include "parceldelin/common/error.hpp"
#include "parceldelin/geodata/polygon.hpp"

namespace parceldelin::geodata {
namespace {

using nlohmann::json;

GeoRing parse_ring(const json& ring, const std::string& where) {
    if (!ring.is_array()) throw FormatError(where + ": ring is not an array");
    GeoRing out;
    out.reserve(ring.size());
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const auto& pos = ring[i];
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw FormatError(where + "[" + std::to_string(i) + "]: position must be [lon, lat]");
        }
        out.push_back(GeoPoint{pos[0].get<double>(), pos[1].get<double>()});
    }
    return normalize_ring(std::move(out));
}

PolygonGeo parse_polygon(const json& rings, const std::string& where) {
    if (!rings.is_array() || rings.empty()) throw FormatError(where + ": polygon needs at least one ring");
    PolygonGeo poly;
    poly.outer = parse_ring(rings[0], where + ".coordinates[0]");
    for (std::size_t i = 1; i < rings.size(); ++i) {
        poly.holes.push_back(parse_ring(rings[i], where + ".coordinates[" + std::to_string(i) + "]"));
    }
    return poly;
}

}  // namespace

std::vector<ParcelRecord> parse_geojson_polygons(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("geojson: malformed JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
        throw FormatError("geojson: top level must be a FeatureCollection");
    }
    const auto it = doc.find("features");
    if (it == doc.end() || !it->is_array()) throw FormatError("geojson: features must be an array");

    std::vector<ParcelRecord> out;
    for (std::size_t f = 0; f < it->size(); ++f) {
        const auto& feature = (*it)[f];
        const std::string where = "features[" + std::to_string(f) + "]";
        if (!feature.is_object()) throw FormatError(where + ": feature must be an object");
        const auto g = feature.find("geometry");
        if (g == feature.end() || !g->is_object()) {
            throw UnsupportedFeatureError(where + ": feature has no polygon geometry");
        }
        const std::string type = g->value("type", "");
        const auto coords = g->find("coordinates");
        if (type != "Polygon" && type != "MultiPolygon") {
            throw UnsupportedFeatureError(where + ": geometry type '" + type + "' is not Polygon/MultiPolygon");
        }
        if (coords == g->end() || !coords->is_array()) throw FormatError(where + ".geometry: missing coordinates");
        auto push = [&](PolygonGeo poly) {
            ParcelRecord rec;
            rec.id = static_cast<std::int64_t>(out.size());
            rec.source_id = static_cast<std::int64_t>(f);
            rec.polygon = std::move(poly);
            out.push_back(std::move(rec));
        };
        if (type == "Polygon") {
            push(parse_polygon(*coords, where + ".geometry"));
        } else {
            for (std::size_t p = 0; p < coords->size(); ++p) {
                push(parse_polygon((*coords)[p], where + ".geometry.coordinates[" + std::to_string(p) + "]"));
            }
        }
    }
    return out;
}

std::string write_geojson_polygons(const std::vector<ParcelRecord>& parcels) {
    auto ring_json = [](const GeoRing& ring) {
        json r = json::array();
        for (const auto& p : ring) r.push_back({p.lon_deg, p.lat_deg});
        if (!ring.empty()) r.push_back({ring.front().lon_deg, ring.front().lat_deg});
        return r;
    };
    json features = json::array();
    for (const auto& p : parcels) {
        json rings = json::array();
        rings.push_back(ring_json(p.polygon.outer));
        for (const auto& h : p.polygon.holes) rings.push_back(ring_json(h));
        features.push_back({{"type", "Feature"},
                            {"properties", {{"id", p.id}}},
                            {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
    }
    return json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

}  // namespace parceldelin::geodata
