#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "parceldelin/common/variant.hpp"
#include "parceldelin/imageio/png.hpp"
#include "parceldelin/nn/tensor.hpp"
#include "parceldelin/raster/mask.hpp"

namespace parceldelin::dataset {

// Seasonal acquisition windows: Jan-Mar, Apr-Jun, Jul-Sep.
enum class TimeSlot { Slot0 = 0, Slot1 = 1, Slot2 = 2 };
inline constexpr std::size_t kSlotCount = 3;
// The slot whose image must always exist and stands in for missing ones.
inline constexpr std::size_t kReferenceSlot = 1;

enum class Split { Train, Val, Test };
std::string_view to_string(Split s);
Split parse_split(std::string_view name);

// One tile of the dataset as recorded on disk. Paths are relative to the
// manifest's directory; a missing image is std::nullopt.
struct TileEntry {
    int tile_id = 0;
    std::array<std::optional<std::string>, kSlotCount> images;
    std::string boundary;
    std::string area;
    std::optional<Split> split;

    friend bool operator==(const TileEntry&, const TileEntry&) = default;
};

struct DatasetManifest {
    int version = 1;
    int size_px = 0;
    std::uint64_t seed = 0;
    std::vector<TileEntry> tiles;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Default on-disk names.
std::string image_filename(int tile_id, std::size_t slot);
std::string boundary_filename(int tile_id);
std::string area_filename(int tile_id);

// Throws FormatError naming the offending field path (e.g. "tiles[3].images.s1").
DatasetManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);

struct Sample {
    int tile_id = 0;
    std::array<imageio::RgbImage, kSlotCount> images;
    std::array<bool, kSlotCount> substituted{};
    raster::Mask boundary_mask;
    raster::Mask area_mask;

    int width() const { return images[kReferenceSlot].width; }
    int height() const { return images[kReferenceSlot].height; }
    const raster::Mask& mask(Task t) const { return t == Task::Boundary ? boundary_mask : area_mask; }
};

// Loads the images and masks of one tile. Missing Slot0/Slot2 images are
// replaced by a copy of the Slot1 image. Throws DataError when Slot1 is absent
// or image and mask sizes disagree.
Sample assemble_sample(const TileEntry& row, const std::filesystem::path& base_dir);

// Same substitution rule applied to already-decoded images.
Sample assemble_sample(int tile_id, std::array<std::optional<imageio::RgbImage>, kSlotCount> images,
                       raster::Mask boundary, raster::Mask area);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
};

// Sorts tile ids ascending, applies a seeded Fisher-Yates shuffle and assigns
// the first floor(0.8 n) to train, the next floor(0.1 n) to val, the rest to
// test. Requires n >= 10 (ConfigError otherwise).
DatasetManifest split_dataset(DatasetManifest manifest, std::uint64_t seed, SplitFractions fractions = {});

std::vector<const TileEntry*> tiles_in_split(const DatasetManifest& m, Split s);

// Number of input channels the variant consumes (3 or 9).
std::size_t input_channels(ModelVariant v);

// (C, H, W) float tensor with values byte/255: Slot1 RGB for spatial variants,
// slots 0, 1, 2 concatenated for spatio-temporal ones.
nn::Tensor<float> to_input_tensor(const Sample& sample, ModelVariant variant);

// (N, C, H, W) inputs and (N, 1, H, W) targets for the selected samples.
struct Batch {
    nn::Tensor<float> inputs;
    nn::Tensor<float> targets;
};
Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices, ModelVariant variant,
                 Task task);

// Loads every tile of a split (or every tile when `split` is empty).
std::vector<Sample> load_samples(const DatasetManifest& m, const std::filesystem::path& base_dir,
                                 std::optional<Split> split);

}  // namespace parceldelin::dataset
