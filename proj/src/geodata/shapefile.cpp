#include "parceldelin/geodata/shapefile.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <string>

#include "parceldelin/common/error.hpp"
#include "parceldelin/geodata/polygon.hpp"
#include "parceldelin/geodata/projection.hpp"

namespace parceldelin::geodata {
namespace {

constexpr std::size_t kHeaderBytes = 100;
constexpr std::size_t kRecordHeaderBytes = 8;

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t size() const { return bytes_.size(); }
    bool has(std::size_t offset, std::size_t n) const { return offset <= bytes_.size() && n <= bytes_.size() - offset; }

    std::int32_t be_i32(std::size_t off) const {
        const auto* p = bytes_.data() + off;
        return static_cast<std::int32_t>((std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                                         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]});
    }
    std::int32_t le_i32(std::size_t off) const {
        const auto* p = bytes_.data() + off;
        return static_cast<std::int32_t>(std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                         (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24));
    }
    double le_f64(std::size_t off) const {
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[off + static_cast<std::size_t>(i)];
        return std::bit_cast<double>(v);
    }

private:
    std::span<const std::uint8_t> bytes_;
};

class Writer {
public:
    void be_i32(std::int32_t v) {
        const auto u = static_cast<std::uint32_t>(v);
        for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(u >> s));
    }
    void le_i32(std::int32_t v) {
        const auto u = static_cast<std::uint32_t>(v);
        for (int s = 0; s <= 24; s += 8) out.push_back(static_cast<std::uint8_t>(u >> s));
    }
    void le_f64(double d) {
        const auto u = std::bit_cast<std::uint64_t>(d);
        for (int s = 0; s <= 56; s += 8) out.push_back(static_cast<std::uint8_t>(u >> s));
    }
    void patch_be_i32(std::size_t off, std::int32_t v) {
        const auto u = static_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i) out[off + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(u >> (24 - 8 * i));
    }
    std::vector<std::uint8_t> out;
};

std::string rec_label(std::size_t index) { return "record " + std::to_string(index); }

void check_header(const Reader& r, const char* which) {
    if (!r.has(0, kHeaderBytes)) {
        throw FormatError(std::string(which) + ": file shorter than the 100-byte header");
    }
    if (r.be_i32(0) != kShapefileCode) {
        throw FormatError(std::string(which) + ": bad file code " + std::to_string(r.be_i32(0)) + " (expected 9994)");
    }
    const std::int32_t type = r.le_i32(32);
    if (type != kShapeTypePolygon) {
        throw UnsupportedFeatureError(std::string(which) + ": shape type " + std::to_string(type) +
                                      " not supported (only Polygon = 5)");
    }
}

ShapePolygon decode_record(const Reader& r, std::size_t offset, std::size_t index, std::size_t file_end,
                           bool& is_null) {
    if (offset + kRecordHeaderBytes > file_end) {
        throw FormatError(rec_label(index) + ": truncated record header");
    }
    const std::int32_t number = r.be_i32(offset);
    const std::int64_t content_words = r.be_i32(offset + 4);
    const std::size_t content = offset + kRecordHeaderBytes;
    if (content_words < 2 || content + static_cast<std::size_t>(content_words) * 2 > file_end) {
        throw FormatError(rec_label(index) + ": truncated record content");
    }
    const std::size_t end = content + static_cast<std::size_t>(content_words) * 2;
    const std::int32_t type = r.le_i32(content);
    ShapePolygon poly;
    poly.record_number = number;
    is_null = type == kShapeTypeNull;
    if (is_null) return poly;
    if (type != kShapeTypePolygon) {
        throw UnsupportedFeatureError(rec_label(index) + ": shape type " + std::to_string(type) +
                                      " not supported (only Polygon = 5)");
    }
    if (content + 44 > end) throw FormatError(rec_label(index) + ": truncated polygon header");
    const std::int32_t num_parts = r.le_i32(content + 36);
    const std::int32_t num_points = r.le_i32(content + 40);
    if (num_parts < 1 || num_points < 0) {
        throw FormatError(rec_label(index) + ": invalid part/point counts");
    }
    const std::size_t parts_off = content + 44;
    const std::size_t points_off = parts_off + 4 * static_cast<std::size_t>(num_parts);
    if (points_off + 16 * static_cast<std::size_t>(num_points) > end) {
        throw FormatError(rec_label(index) + ": truncated point array");
    }
    std::vector<std::int32_t> starts(static_cast<std::size_t>(num_parts));
    for (std::size_t i = 0; i < starts.size(); ++i) starts[i] = r.le_i32(parts_off + 4 * i);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const std::int32_t lo = starts[i];
        const std::int32_t hi = i + 1 < starts.size() ? starts[i + 1] : num_points;
        if (lo < 0 || hi < lo || hi > num_points) {
            throw FormatError(rec_label(index) + ": part index out of range");
        }
        std::vector<ShapePoint> ring;
        ring.reserve(static_cast<std::size_t>(hi - lo));
        for (std::int32_t k = lo; k < hi; ++k) {
            const std::size_t off = points_off + 16 * static_cast<std::size_t>(k);
            ring.push_back(ShapePoint{r.le_f64(off), r.le_f64(off + 8)});
        }
        poly.rings.push_back(std::move(ring));
    }
    return poly;
}

double planar_signed_area(const std::vector<ShapePoint>& ring) {
    if (ring.size() < 3) return 0.0;
    const double x0 = ring[0].x, y0 = ring[0].y;
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        twice += (ring[i].x - x0) * (ring[i + 1].y - y0) - (ring[i + 1].x - x0) * (ring[i].y - y0);
    }
    const auto& a = ring.back();
    const auto& b = ring.front();
    twice += (a.x - x0) * (b.y - y0) - (b.x - x0) * (a.y - y0);
    return twice / 2.0;
}

void write_header(Writer& w, std::int32_t length_words, double xmin, double ymin, double xmax, double ymax) {
    w.be_i32(kShapefileCode);
    for (int i = 0; i < 5; ++i) w.be_i32(0);
    w.be_i32(length_words);
    w.le_i32(kShapefileVersion);
    w.le_i32(kShapeTypePolygon);
    w.le_f64(xmin);
    w.le_f64(ymin);
    w.le_f64(xmax);
    w.le_f64(ymax);
    for (int i = 0; i < 4; ++i) w.le_f64(0.0);
}

}  // namespace

std::vector<ShapePolygon> read_shapefile_polygons(std::span<const std::uint8_t> main,
                                                  std::optional<std::span<const std::uint8_t>> index) {
    const Reader r(main);
    check_header(r, ".shp");
    const std::int64_t declared = static_cast<std::int64_t>(r.be_i32(24)) * 2;
    if (declared < static_cast<std::int64_t>(kHeaderBytes)) {
        throw FormatError(".shp: declared file length shorter than the header");
    }
    if (static_cast<std::size_t>(declared) > main.size()) {
        throw FormatError(".shp: declared length " + std::to_string(declared) + " bytes exceeds actual size " +
                          std::to_string(main.size()) + " (truncated file)");
    }
    const auto file_end = static_cast<std::size_t>(declared);

    std::vector<ShapePolygon> out;
    bool is_null = false;
    if (index) {
        const Reader ix(*index);
        check_header(ix, ".shx");
        const std::size_t n = (index->size() - kHeaderBytes) / 8;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t off = static_cast<std::int64_t>(ix.be_i32(kHeaderBytes + 8 * i)) * 2;
            const std::int64_t len = static_cast<std::int64_t>(ix.be_i32(kHeaderBytes + 8 * i + 4)) * 2;
            if (off < static_cast<std::int64_t>(kHeaderBytes) || static_cast<std::size_t>(off) >= file_end) {
                throw FormatError(rec_label(i) + ": index offset outside the .shp file");
            }
            if (r.has(static_cast<std::size_t>(off) + 4, 4) &&
                static_cast<std::int64_t>(r.be_i32(static_cast<std::size_t>(off) + 4)) * 2 != len) {
                throw FormatError(rec_label(i) + ": content length disagrees with the index");
            }
            auto poly = decode_record(r, static_cast<std::size_t>(off), i, file_end, is_null);
            if (!is_null) out.push_back(std::move(poly));
        }
        return out;
    }
    std::size_t offset = kHeaderBytes;
    for (std::size_t i = 0; offset < file_end; ++i) {
        auto poly = decode_record(r, offset, i, file_end, is_null);
        offset += kRecordHeaderBytes + static_cast<std::size_t>(r.be_i32(offset + 4)) * 2;
        if (!is_null) out.push_back(std::move(poly));
    }
    return out;
}

ShapefileBytes write_shapefile_polygons(std::span<const ShapePolygon> polygons) {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
    double xmax = -std::numeric_limits<double>::infinity(), ymax = xmax;
    for (const auto& p : polygons) {
        for (const auto& ring : p.rings) {
            for (const auto& pt : ring) {
                xmin = std::min(xmin, pt.x);
                ymin = std::min(ymin, pt.y);
                xmax = std::max(xmax, pt.x);
                ymax = std::max(ymax, pt.y);
            }
        }
    }
    if (polygons.empty()) xmin = ymin = xmax = ymax = 0.0;

    Writer shp, shx;
    write_header(shp, 0, xmin, ymin, xmax, ymax);
    write_header(shx, 0, xmin, ymin, xmax, ymax);
    for (const auto& p : polygons) {
        std::size_t npoints = 0;
        for (const auto& ring : p.rings) npoints += ring.size();
        const std::size_t content_bytes = 44 + 4 * p.rings.size() + 16 * npoints;
        const auto offset_words = static_cast<std::int32_t>(shp.out.size() / 2);
        const auto content_words = static_cast<std::int32_t>(content_bytes / 2);
        shx.be_i32(offset_words);
        shx.be_i32(content_words);

        shp.be_i32(p.record_number);
        shp.be_i32(content_words);
        shp.le_i32(kShapeTypePolygon);
        double bx0 = std::numeric_limits<double>::infinity(), by0 = bx0;
        double bx1 = -std::numeric_limits<double>::infinity(), by1 = bx1;
        for (const auto& ring : p.rings) {
            for (const auto& pt : ring) {
                bx0 = std::min(bx0, pt.x);
                by0 = std::min(by0, pt.y);
                bx1 = std::max(bx1, pt.x);
                by1 = std::max(by1, pt.y);
            }
        }
        shp.le_f64(bx0);
        shp.le_f64(by0);
        shp.le_f64(bx1);
        shp.le_f64(by1);
        shp.le_i32(static_cast<std::int32_t>(p.rings.size()));
        shp.le_i32(static_cast<std::int32_t>(npoints));
        std::int32_t start = 0;
        for (const auto& ring : p.rings) {
            shp.le_i32(start);
            start += static_cast<std::int32_t>(ring.size());
        }
        for (const auto& ring : p.rings) {
            for (const auto& pt : ring) {
                shp.le_f64(pt.x);
                shp.le_f64(pt.y);
            }
        }
    }
    shp.patch_be_i32(24, static_cast<std::int32_t>(shp.out.size() / 2));
    shx.patch_be_i32(24, static_cast<std::int32_t>(shx.out.size() / 2));
    return ShapefileBytes{std::move(shp.out), std::move(shx.out)};
}

std::vector<ParcelRecord> parse_shapefile(std::span<const std::uint8_t> main,
                                          std::optional<std::span<const std::uint8_t>> index) {
    const auto shapes = read_shapefile_polygons(main, index);
    std::vector<ParcelRecord> out;
    for (std::size_t s = 0; s < shapes.size(); ++s) {
        bool have_outer = false;
        for (const auto& ring : shapes[s].rings) {
            const bool outer = planar_signed_area(ring) < 0.0;
            GeoRing geo;
            geo.reserve(ring.size());
            for (const auto& pt : ring) geo.push_back(lambert93_to_wgs84(LambertPoint{pt.x, pt.y}));
            geo = normalize_ring(std::move(geo));
            if (outer) {
                ParcelRecord rec;
                rec.id = static_cast<std::int64_t>(out.size());
                rec.source_id = static_cast<std::int64_t>(s);
                rec.polygon.outer = std::move(geo);
                out.push_back(std::move(rec));
                have_outer = true;
            } else {
                if (!have_outer) {
                    throw FormatError(rec_label(s) + ": hole ring precedes any outer ring");
                }
                out.back().polygon.holes.push_back(std::move(geo));
            }
        }
    }
    return out;
}

namespace {

std::vector<ShapePoint> to_planar_ring(const GeoRing& ring, bool clockwise) {
    std::vector<ShapePoint> pts;
    pts.reserve(ring.size() + 1);
    for (const auto& g : ring) {
        const auto l = wgs84_to_lambert93(g);
        pts.push_back(ShapePoint{l.easting_m, l.northing_m});
    }
    if (!pts.empty()) pts.push_back(pts.front());
    const double area = planar_signed_area(pts);
    if ((clockwise && area > 0.0) || (!clockwise && area < 0.0)) std::reverse(pts.begin(), pts.end());
    return pts;
}

}  // namespace

ShapefileBytes write_shapefile(std::span<const ParcelRecord> parcels) {
    std::vector<ShapePolygon> shapes;
    shapes.reserve(parcels.size());
    for (std::size_t i = 0; i < parcels.size(); ++i) {
        ShapePolygon s;
        s.record_number = static_cast<std::int32_t>(i + 1);
        s.rings.push_back(to_planar_ring(parcels[i].polygon.outer, true));
        for (const auto& h : parcels[i].polygon.holes) s.rings.push_back(to_planar_ring(h, false));
        shapes.push_back(std::move(s));
    }
    return write_shapefile_polygons(shapes);
}

}  // namespace parceldelin::geodata
