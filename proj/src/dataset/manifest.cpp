#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "parceldelin/common/error.hpp"
#include "parceldelin/dataset/dataset.hpp"

namespace parceldelin::dataset {
namespace {

using nlohmann::json;

const char* kSlotKeys[kSlotCount] = {"s0", "s1", "s2"};

const json& require(const json& obj, const char* key, const std::string& path) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw FormatError("manifest: missing field " + path + "." + key);
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw FormatError("manifest: field " + path + "." + key + " must be a string");
    return v.get<std::string>();
}

long long require_integer(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_number_integer()) throw FormatError("manifest: field " + path + "." + key + " must be an integer");
    return v.get<long long>();
}

}  // namespace

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

std::string image_filename(int tile_id, std::size_t slot) {
    return std::to_string(tile_id) + "_s" + std::to_string(slot) + ".png";
}
std::string boundary_filename(int tile_id) { return std::to_string(tile_id) + "_boundary.png"; }
std::string area_filename(int tile_id) { return std::to_string(tile_id) + "_area.png"; }

DatasetManifest manifest_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("manifest: malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw FormatError("manifest: top level must be an object");
    DatasetManifest m;
    m.version = static_cast<int>(require_integer(doc, "version", "$"));
    if (m.version != 1) throw FormatError("manifest: field $.version must be 1, got " + std::to_string(m.version));
    m.size_px = static_cast<int>(require_integer(doc, "size_px", "$"));
    if (m.size_px < 1) throw FormatError("manifest: field $.size_px must be positive");
    const auto& seed = require(doc, "seed", "$");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
        throw FormatError("manifest: field $.seed must be a non-negative integer");
    }
    m.seed = seed.get<std::uint64_t>();
    const auto& tiles = require(doc, "tiles", "$");
    if (!tiles.is_array()) throw FormatError("manifest: field $.tiles must be an array");
    std::set<int> seen;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        const std::string path = "$.tiles[" + std::to_string(i) + "]";
        const auto& t = tiles[i];
        if (!t.is_object()) throw FormatError("manifest: " + path + " must be an object");
        TileEntry e;
        e.tile_id = static_cast<int>(require_integer(t, "tile_id", path));
        if (!seen.insert(e.tile_id).second) {
            throw FormatError("manifest: " + path + ".tile_id " + std::to_string(e.tile_id) + " is duplicated");
        }
        const auto& images = require(t, "images", path);
        if (!images.is_object()) throw FormatError("manifest: " + path + ".images must be an object");
        for (std::size_t s = 0; s < kSlotCount; ++s) {
            const std::string ipath = path + ".images";
            const auto it = images.find(kSlotKeys[s]);
            if (it == images.end()) throw FormatError("manifest: missing field " + ipath + "." + kSlotKeys[s]);
            if (it->is_null()) {
                if (s == kReferenceSlot) {
                    throw FormatError("manifest: field " + ipath + ".s1 must not be null (Slot1 is required)");
                }
                continue;
            }
            if (!it->is_string()) throw FormatError("manifest: field " + ipath + "." + kSlotKeys[s] + " must be a string or null");
            e.images[s] = it->get<std::string>();
        }
        e.boundary = require_string(t, "boundary", path);
        e.area = require_string(t, "area", path);
        const auto split = t.find("split");
        if (split != t.end() && !split->is_null()) {
            if (!split->is_string()) throw FormatError("manifest: field " + path + ".split must be a string");
            try {
                e.split = parse_split(split->get<std::string>());
            } catch (const ConfigError&) {
                throw FormatError("manifest: field " + path + ".split has unknown value '" +
                                  split->get<std::string>() + "'");
            }
        }
        m.tiles.push_back(std::move(e));
    }
    return m;
}

std::string manifest_to_json(const DatasetManifest& m) {
    json tiles = json::array();
    for (const auto& t : m.tiles) {
        json images = json::object();
        for (std::size_t s = 0; s < kSlotCount; ++s) {
            images[kSlotKeys[s]] = t.images[s] ? json(*t.images[s]) : json(nullptr);
        }
        tiles.push_back({{"tile_id", t.tile_id},
                         {"images", images},
                         {"boundary", t.boundary},
                         {"area", t.area},
                         {"split", t.split ? json(std::string(to_string(*t.split))) : json(nullptr)}});
    }
    json doc = {{"version", m.version}, {"size_px", m.size_px}, {"seed", m.seed}, {"tiles", tiles}};
    return doc.dump(2) + "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return manifest_from_json(ss.str());
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << manifest_to_json(m);
    if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

}  // namespace parceldelin::dataset
