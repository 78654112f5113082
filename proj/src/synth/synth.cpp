#include "parceldelin/synth/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "parceldelin/common/error.hpp"
#include "parceldelin/common/rng.hpp"
#include "parceldelin/raster/draw.hpp"

namespace parceldelin::synth {

namespace {

// Independent random streams within one tile.
enum Stream : std::uint64_t { kLayout = 1, kColors = 2, kNoise = 3, kCloud = 4 };

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void validate(const SynthConfig& cfg) {
    std::vector<std::string> problems;
    if (cfg.size_px < 32) problems.push_back("size_px must be >= 32");
    if (cfg.sites_min < 2) problems.push_back("sites_min must be >= 2");
    if (cfg.sites_max < cfg.sites_min) problems.push_back("sites_max must be >= sites_min");
    if (!is_probability(cfg.farm_fraction)) problems.push_back("farm_fraction must lie in [0, 1]");
    if (!is_probability(cfg.cloud.probability)) problems.push_back("cloud probability must lie in [0, 1]");
    if (!(cfg.cloud.radius_min >= 0.0 && cfg.cloud.radius_min <= cfg.cloud.radius_max)) {
        problems.push_back("cloud radius range must satisfy 0 <= min <= max");
    }
    if (!(cfg.noise_sigma >= 0.0)) problems.push_back("noise_sigma must be >= 0");
    if (!(cfg.cell_drift >= 0.0)) problems.push_back("cell_drift must be >= 0");
    if (cfg.palette_size < 1) problems.push_back("palette_size must be >= 1");
    if (!problems.empty()) {
        std::string msg = "invalid synthetic data configuration: ";
        for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
        throw ConfigError(msg);
    }
}

std::uint64_t tile_seed(const SynthConfig& cfg, int tile_id) {
    return mix_seed(cfg.seed, static_cast<std::uint64_t>(tile_id));
}

CellGrid assign_cells(int width, int height, const std::vector<Site>& sites, std::vector<bool> farmland) {
    if (sites.size() < 2) throw ConfigError("a Voronoi tile needs at least 2 sites");
    if (farmland.size() != sites.size()) throw ShapeError("farmland flags must match the number of sites");
    CellGrid g;
    g.width = width;
    g.height = height;
    g.farmland = std::move(farmland);
    g.cell.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int r = 0; r < height; ++r) {
        const double py = r + 0.5;
        for (int c = 0; c < width; ++c) {
            const double px = c + 0.5;
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < sites.size(); ++s) {
                const double dx = px - sites[s].x;
                const double dy = py - sites[s].y;
                const double d = dx * dx + dy * dy;
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(s);
                }
            }
            g.cell[static_cast<std::size_t>(r * width + c)] = best;
        }
    }
    return g;
}

VoronoiTile masks_from_grid(CellGrid grid) {
    VoronoiTile t;
    const int w = grid.width;
    const int h = grid.height;
    t.boundary = raster::Mask(w, h);
    t.area = raster::Mask(w, h);
    const auto farm = [&](int cell) { return static_cast<bool>(grid.farmland[static_cast<std::size_t>(cell)]); };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int id = grid.at(c, r);
            if (farm(id)) t.area.set(c, r);
            bool edge = false;
            if (c + 1 < w) {
                const int other = grid.at(c + 1, r);
                edge = edge || (other != id && (farm(id) || farm(other)));
            }
            if (r + 1 < h) {
                const int other = grid.at(c, r + 1);
                edge = edge || (other != id && (farm(id) || farm(other)));
            }
            if (edge) raster::stamp2x2(t.boundary, c, r);
        }
    }
    t.grid = std::move(grid);
    return t;
}

VoronoiTile voronoi_masks(const SynthConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    Rng rng(mix_seed(seed, kLayout));
    const auto span = static_cast<std::uint64_t>(cfg.sites_max - cfg.sites_min + 1);
    const int n = cfg.sites_min + static_cast<int>(rng.uniform_index(span));
    std::vector<Site> sites(static_cast<std::size_t>(n));
    for (auto& s : sites) {
        s.x = rng.uniform(0.0, cfg.size_px);
        s.y = rng.uniform(0.0, cfg.size_px);
    }
    std::vector<std::size_t> order(sites.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_farm = static_cast<std::size_t>(std::llround(cfg.farm_fraction * n));
    std::vector<bool> farmland(sites.size(), false);
    for (std::size_t i = 0; i < n_farm; ++i) farmland[order[i]] = true;
    return masks_from_grid(assign_cells(cfg.size_px, cfg.size_px, sites, std::move(farmland)));
}

CellColors draw_cell_colors(const CellGrid& grid, const SynthConfig& cfg, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kColors));
    std::vector<Rgb> palette(static_cast<std::size_t>(cfg.palette_size));
    for (auto& p : palette) {
        for (auto& ch : p) ch = rng.uniform(0.25, 0.85);
    }
    CellColors out;
    out.color.resize(grid.farmland.size());
    for (std::size_t cell = 0; cell < grid.farmland.size(); ++cell) {
        Rgb anchor;
        if (grid.farmland[cell]) {
            anchor = palette[rng.uniform_index(palette.size())];
        } else {
            for (auto& ch : anchor) ch = rng.uniform(0.05, 0.3);
        }
        for (std::size_t s = 0; s < dataset::kSlotCount; ++s) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double v = anchor[ch] + cfg.slot_offsets[s];
                if (s != dataset::kReferenceSlot) v += rng.uniform(-cfg.cell_drift, cfg.cell_drift);
                out.color[cell][s][ch] = v;
            }
        }
    }
    return out;
}

SlotImages paint_images(const CellGrid& grid, const CellColors& colors, double noise_sigma, std::uint64_t noise_seed) {
    if (colors.color.size() != grid.farmland.size()) throw ShapeError("one colour set per cell is required");
    Rng rng(noise_seed);
    SlotImages out;
    for (std::size_t s = 0; s < dataset::kSlotCount; ++s) {
        auto& img = out[s];
        img = FloatImage(grid.width, grid.height);
        for (int r = 0; r < grid.height; ++r) {
            for (int c = 0; c < grid.width; ++c) {
                const auto& rgb = colors.color[static_cast<std::size_t>(grid.at(c, r))][s];
                for (int ch = 0; ch < 3; ++ch) {
                    double v = rgb[static_cast<std::size_t>(ch)];
                    if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
                    img.at(c, r, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            }
        }
    }
    return out;
}

SlotImages render_images(const CellGrid& grid, const SynthConfig& cfg, std::uint64_t seed) {
    return paint_images(grid, draw_cell_colors(grid, cfg, seed), cfg.noise_sigma, mix_seed(seed, kNoise));
}

bool cloud_covers(const CloudRecord& cloud, int col, int row) {
    if (!cloud.applied) return false;
    // Distance from the centre to the nearest point of the pixel square.
    const double dx = std::max({col - cloud.cx, 0.0, cloud.cx - (col + 1)});
    const double dy = std::max({row - cloud.cy, 0.0, cloud.cy - (row + 1)});
    return dx * dx + dy * dy < cloud.radius * cloud.radius;
}

void apply_cloud(SlotImages& images, const CloudRecord& cloud) {
    if (!cloud.applied) return;
    if (cloud.slot >= dataset::kSlotCount) throw ConfigError("cloud slot out of range");
    auto& img = images[cloud.slot];
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            if (!cloud_covers(cloud, c, r)) continue;
            for (int ch = 0; ch < 3; ++ch) img.at(c, r, ch) = 1.0f;
        }
    }
}

CloudRecord add_cloud(SlotImages& images, const SynthConfig& cfg, std::uint64_t seed) {
    Rng rng(mix_seed(seed, kCloud));
    CloudRecord rec;
    if (!(rng.uniform() < cfg.cloud.probability)) return rec;
    const int size = images[dataset::kReferenceSlot].width;
    rec.applied = true;
    if (cfg.cloud.allow_slot1) {
        rec.slot = static_cast<std::size_t>(rng.uniform_index(3));
    } else {
        rec.slot = rng.uniform_index(2) == 0 ? 0 : 2;
    }
    rec.cx = rng.uniform(0.0, size);
    rec.cy = rng.uniform(0.0, images[dataset::kReferenceSlot].height);
    rec.radius = rng.uniform(cfg.cloud.radius_min, cfg.cloud.radius_max) * size;
    apply_cloud(images, rec);
    return rec;
}

imageio::RgbImage to_rgb8(const FloatImage& image) {
    imageio::RgbImage out(image.width, image.height);
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        const double v = std::clamp(static_cast<double>(image.data[i]), 0.0, 1.0);
        out.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

SynthTile generate_tile(const SynthConfig& cfg, int tile_id) {
    const std::uint64_t seed = tile_seed(cfg, tile_id);
    SynthTile t;
    t.tile_id = tile_id;
    t.masks = voronoi_masks(cfg, seed);
    t.images = render_images(t.masks.grid, cfg, seed);
    t.cloud = add_cloud(t.images, cfg, seed);
    return t;
}

SynthResult generate(const SynthConfig& cfg, const std::filesystem::path& out_dir, std::size_t jobs) {
    validate(cfg);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

    const std::size_t n = cfg.n_tiles;
    SynthResult result;
    result.clouds.resize(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const int id = static_cast<int>(i);
                const auto tile = generate_tile(cfg, id);
                for (std::size_t s = 0; s < dataset::kSlotCount; ++s) {
                    imageio::save_rgb_png(out_dir / dataset::image_filename(id, s), to_rgb8(tile.images[s]));
                }
                imageio::save_mask_png(out_dir / dataset::boundary_filename(id), tile.masks.boundary);
                imageio::save_mask_png(out_dir / dataset::area_filename(id), tile.masks.area);
                result.clouds[i] = tile.cloud;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    auto& m = result.manifest;
    m.size_px = cfg.size_px;
    m.seed = cfg.seed;
    for (std::size_t i = 0; i < n; ++i) {
        const int id = static_cast<int>(i);
        dataset::TileEntry e;
        e.tile_id = id;
        for (std::size_t s = 0; s < dataset::kSlotCount; ++s) e.images[s] = dataset::image_filename(id, s);
        e.boundary = dataset::boundary_filename(id);
        e.area = dataset::area_filename(id);
        m.tiles.push_back(std::move(e));
    }
    if (n >= 10) m = dataset::split_dataset(std::move(m), cfg.seed);
    dataset::save_manifest(out_dir / "manifest.json", m);

    nlohmann::json clouds = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = result.clouds[i];
        nlohmann::json j{{"tile_id", i}, {"applied", c.applied}};
        if (c.applied) {
            j["slot"] = c.slot;
            j["cx"] = c.cx;
            j["cy"] = c.cy;
            j["radius"] = c.radius;
        }
        clouds.push_back(j);
    }
    const auto path = out_dir / "clouds.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << clouds.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    return result;
}

}  // namespace parceldelin::synth
