#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "parceldelin/dataset/dataset.hpp"
#include "parceldelin/imageio/png.hpp"
#include "parceldelin/raster/mask.hpp"

namespace parceldelin::synth {

struct CloudConfig {
    double probability = 0.0;  // per tile
    double radius_min = 0.15;  // as a fraction of size_px
    double radius_max = 0.35;
    bool allow_slot1 = false;  // default policy picks slot 0 or 2
};

struct SynthConfig {
    std::size_t n_tiles = 200;
    int size_px = 96;
    int sites_min = 8;
    int sites_max = 16;
    // Seasonal shift applied to every pixel of a slot (added to R, G, B).
    std::array<double, dataset::kSlotCount> slot_offsets{-0.05, 0.0, 0.05};
    // Per-cell colour drift in slots 0 and 2: each channel moves by a value
    // drawn uniformly from [-cell_drift, cell_drift]. Slot 1 is the anchor.
    double cell_drift = 0.25;
    // Farmland cells take their Slot1 colour from a small per-tile palette, so
    // neighbouring parcels often look alike in that slot.
    int palette_size = 2;
    double noise_sigma = 0.03;
    double farm_fraction = 0.7;
    CloudConfig cloud;
    std::uint64_t seed = 0;
};

// ConfigError listing violated constraints (size_px >= 32, probabilities in
// [0, 1], 2 <= sites_min <= sites_max, ...).
void validate(const SynthConfig& cfg);

std::uint64_t tile_seed(const SynthConfig& cfg, int tile_id);

struct Site {
    double x = 0.0;
    double y = 0.0;
};

struct CellGrid {
    int width = 0;
    int height = 0;
    std::vector<int> cell;       // row-major cell index per pixel
    std::vector<bool> farmland;  // per cell
    int at(int col, int row) const { return cell[static_cast<std::size_t>(row * width + col)]; }
};

// Nearest site to each pixel centre (c + 0.5, r + 0.5) under L2, ties to the
// lowest site index.
CellGrid assign_cells(int width, int height, const std::vector<Site>& sites, std::vector<bool> farmland);

struct VoronoiTile {
    CellGrid grid;
    raster::Mask boundary;
    raster::Mask area;
};

// Masks of a given grid: area = farmland pixels. A pixel whose right or lower
// neighbour lies in another cell, with at least one of the two cells being
// farmland, gets a 2x2 stamp; the result is a 2-px line centred on the edge.
VoronoiTile masks_from_grid(CellGrid grid);

// Random sites and farmland selection for one tile, then masks_from_grid.
VoronoiTile voronoi_masks(const SynthConfig& cfg, std::uint64_t tile_seed);

// Float RGB image, interleaved, values in [0, 1].
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    FloatImage() = default;
    FloatImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w * h * 3), 0.0f) {}
    float& at(int col, int row, int ch) { return data[static_cast<std::size_t>((row * width + col) * 3 + ch)]; }
    float at(int col, int row, int ch) const { return data[static_cast<std::size_t>((row * width + col) * 3 + ch)]; }
};

using SlotImages = std::array<FloatImage, dataset::kSlotCount>;
using Rgb = std::array<double, 3>;

// Noise-free colour of each cell in each slot.
struct CellColors {
    std::vector<std::array<Rgb, dataset::kSlotCount>> color;
};

CellColors draw_cell_colors(const CellGrid& grid, const SynthConfig& cfg, std::uint64_t tile_seed);

// Paints the cells, adds Gaussian noise (noise_sigma) and clamps to [0, 1].
SlotImages paint_images(const CellGrid& grid, const CellColors& colors, double noise_sigma, std::uint64_t noise_seed);

SlotImages render_images(const CellGrid& grid, const SynthConfig& cfg, std::uint64_t tile_seed);

struct CloudRecord {
    bool applied = false;
    std::size_t slot = 0;
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;

    friend bool operator==(const CloudRecord&, const CloudRecord&) = default;
};

// Pixel (c, r) is occluded iff the open disc overlaps its square [c, c+1) x [r, r+1),
// so the occluded pixels always cover the whole disc.
bool cloud_covers(const CloudRecord& cloud, int col, int row);
void apply_cloud(SlotImages& images, const CloudRecord& cloud);
// Draws whether and where a cloud falls on this tile and applies it.
CloudRecord add_cloud(SlotImages& images, const SynthConfig& cfg, std::uint64_t tile_seed);

imageio::RgbImage to_rgb8(const FloatImage& image);

struct SynthTile {
    int tile_id = 0;
    VoronoiTile masks;
    SlotImages images;
    CloudRecord cloud;
};

SynthTile generate_tile(const SynthConfig& cfg, int tile_id);

struct SynthResult {
    dataset::DatasetManifest manifest;
    std::vector<CloudRecord> clouds;  // by tile id
};

// Writes n_tiles samples (PNG images and masks, manifest.json with an 80/10/10
// split when n_tiles >= 10, clouds.json) into out_dir. Output bytes do not
// depend on `jobs`.
SynthResult generate(const SynthConfig& cfg, const std::filesystem::path& out_dir, std::size_t jobs = 1);

}  // namespace parceldelin::synth
