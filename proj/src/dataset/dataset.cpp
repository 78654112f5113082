#include <algorithm>
#include <cmath>

#include "parceldelin/common/error.hpp"
#include "parceldelin/common/rng.hpp"
#include "parceldelin/dataset/dataset.hpp"

namespace parceldelin::dataset {

Sample assemble_sample(int tile_id, std::array<std::optional<imageio::RgbImage>, kSlotCount> images,
                       raster::Mask boundary, raster::Mask area) {
    if (!images[kReferenceSlot]) {
        throw DataError("tile " + std::to_string(tile_id) + ": Slot1 image is missing (it is required)");
    }
    Sample s;
    s.tile_id = tile_id;
    const auto& ref = *images[kReferenceSlot];
    for (std::size_t k = 0; k < kSlotCount; ++k) {
        if (images[k]) {
            if (images[k]->width != ref.width || images[k]->height != ref.height) {
                throw DataError("tile " + std::to_string(tile_id) + ": slot " + std::to_string(k) +
                                " image size differs from Slot1");
            }
            s.images[k] = std::move(*images[k]);
            s.substituted[k] = false;
        } else {
            s.substituted[k] = true;
        }
    }
    for (std::size_t k = 0; k < kSlotCount; ++k) {
        if (s.substituted[k]) s.images[k] = s.images[kReferenceSlot];
    }
    for (const auto* m : {&boundary, &area}) {
        if (m->width() != s.width() || m->height() != s.height()) {
            throw DataError("tile " + std::to_string(tile_id) + ": mask size " + std::to_string(m->width()) + "x" +
                            std::to_string(m->height()) + " differs from image size " + std::to_string(s.width()) +
                            "x" + std::to_string(s.height()));
        }
    }
    s.boundary_mask = std::move(boundary);
    s.area_mask = std::move(area);
    return s;
}

Sample assemble_sample(const TileEntry& row, const std::filesystem::path& base_dir) {
    if (!row.images[kReferenceSlot]) {
        throw DataError("tile " + std::to_string(row.tile_id) + ": Slot1 image is missing (it is required)");
    }
    std::array<std::optional<imageio::RgbImage>, kSlotCount> images;
    for (std::size_t k = 0; k < kSlotCount; ++k) {
        if (row.images[k]) images[k] = imageio::load_rgb_png(base_dir / *row.images[k]);
    }
    return assemble_sample(row.tile_id, std::move(images), imageio::load_mask_png(base_dir / row.boundary),
                           imageio::load_mask_png(base_dir / row.area));
}

DatasetManifest split_dataset(DatasetManifest manifest, std::uint64_t seed, SplitFractions fractions) {
    const std::size_t n = manifest.tiles.size();
    if (n < 10) {
        throw ConfigError("split_dataset: need at least 10 tiles, got " + std::to_string(n));
    }
    if (fractions.train < 0 || fractions.val < 0 || fractions.train + fractions.val > 1.0) {
        throw ConfigError("split_dataset: invalid split fractions");
    }
    std::vector<int> ids;
    ids.reserve(n);
    for (const auto& t : manifest.tiles) ids.push_back(t.tile_id);
    std::sort(ids.begin(), ids.end());
    Rng rng(seed);
    rng.shuffle(ids);
    // Integer floors keep 80/10/10 exact for n = 2000 without float drift.
    const auto floor_frac = [n](double f) {
        return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
    };
    const std::size_t n_train = floor_frac(fractions.train);
    const std::size_t n_val = floor_frac(fractions.val);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Split s = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
        for (auto& t : manifest.tiles) {
            if (t.tile_id == ids[i]) {
                t.split = s;
                break;
            }
        }
    }
    manifest.seed = seed;
    return manifest;
}

std::vector<const TileEntry*> tiles_in_split(const DatasetManifest& m, Split s) {
    std::vector<const TileEntry*> out;
    for (const auto& t : m.tiles) {
        if (t.split == s) out.push_back(&t);
    }
    return out;
}

std::size_t input_channels(ModelVariant v) { return is_temporal(v) ? 9 : 3; }

nn::Tensor<float> to_input_tensor(const Sample& sample, ModelVariant variant) {
    const std::size_t H = static_cast<std::size_t>(sample.height());
    const std::size_t W = static_cast<std::size_t>(sample.width());
    const std::size_t C = input_channels(variant);
    nn::Tensor<float> t(nn::Shape{C, H, W});
    std::size_t ch = 0;
    auto push_slot = [&](const imageio::RgbImage& img) {
        for (std::size_t c = 0; c < 3; ++c, ++ch) {
            float* dst = t.raw() + ch * H * W;
            for (std::size_t i = 0; i < H * W; ++i) dst[i] = static_cast<float>(img.data[i * 3 + c]) / 255.0f;
        }
    };
    if (is_temporal(variant)) {
        for (const auto& img : sample.images) push_slot(img);
    } else {
        push_slot(sample.images[kReferenceSlot]);
    }
    return t;
}

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices, ModelVariant variant,
                 Task task) {
    if (indices.empty()) throw ConfigError("make_batch: empty batch");
    const auto& first = samples[indices[0]];
    const std::size_t H = static_cast<std::size_t>(first.height());
    const std::size_t W = static_cast<std::size_t>(first.width());
    const std::size_t C = input_channels(variant);
    Batch b{nn::Tensor<float>(nn::Shape{indices.size(), C, H, W}),
            nn::Tensor<float>(nn::Shape{indices.size(), 1, H, W})};
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& s = samples[indices[k]];
        if (static_cast<std::size_t>(s.height()) != H || static_cast<std::size_t>(s.width()) != W) {
            throw DataError("make_batch: samples have different sizes");
        }
        const auto x = to_input_tensor(s, variant);
        std::copy(x.data().begin(), x.data().end(), b.inputs.raw() + k * C * H * W);
        const auto& m = s.mask(task).bits();
        for (std::size_t i = 0; i < H * W; ++i) b.targets[k * H * W + i] = static_cast<float>(m[i]);
    }
    return b;
}

std::vector<Sample> load_samples(const DatasetManifest& m, const std::filesystem::path& base_dir,
                                 std::optional<Split> split) {
    std::vector<Sample> out;
    for (const auto& t : m.tiles) {
        if (split && t.split != split) continue;
        out.push_back(assemble_sample(t, base_dir));
    }
    return out;
}

}  // namespace parceldelin::dataset
