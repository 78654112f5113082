#include "commands.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "parceldelin/common/error.hpp"
#include "parceldelin/dataset/dataset.hpp"
#include "parceldelin/eval/evaluate.hpp"
#include "parceldelin/geodata/geojson.hpp"
#include "parceldelin/geodata/projection.hpp"
#include "parceldelin/geodata/shapefile.hpp"
#include "parceldelin/geodata/tiles.hpp"
#include "parceldelin/model/unet.hpp"
#include "parceldelin/raster/render.hpp"
#include "parceldelin/synth/synth.hpp"
#include "parceldelin/train/trainer.hpp"

namespace parceldelin::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Profile {
    int size_px;
    std::size_t base_filters;
    std::size_t epochs;
};

Profile lookup_profile(const std::string& name) {
    if (name == "desk") return {96, 8, 30};
    if (name == "paper") return {224, 64, 200};
    throw ConfigError("unknown profile '" + name + "' (expected desk or paper)");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first failure (by
// index) is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
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
}

std::vector<geodata::ParcelRecord> load_parcels(const BuildDatasetArgs& a) {
    if (!a.shapefile.empty()) {
        const fs::path shp = a.shapefile;
        const auto main = model::read_file_bytes(shp);
        fs::path shx = shp;
        shx.replace_extension(".shx");
        if (fs::exists(shx)) {
            const auto index = model::read_file_bytes(shx);
            return geodata::parse_shapefile(main, std::span<const std::uint8_t>(index));
        }
        return geodata::parse_shapefile(main);
    }
    return geodata::parse_geojson_polygons(read_text(a.geojson));
}

}  // namespace

void write_effective_config(const std::string& dir, const std::string& command, const json& options) {
    ensure_dir(dir);
    write_text(fs::path(dir) / "effective_config.json",
               json{{"command", command}, {"options", options}}.dump(2) + "\n");
}

json to_json(const BuildDatasetArgs& a) {
    json j{{"out", a.out},         {"n-tiles", a.n_tiles},           {"size-px", a.size_px},
           {"seed", a.seed},       {"max-attempts", a.max_attempts}, {"jobs", a.jobs}};
    if (!a.shapefile.empty()) j["shapefile"] = a.shapefile;
    if (!a.geojson.empty()) j["geojson"] = a.geojson;
    if (!a.images_dir.empty()) j["images-dir"] = a.images_dir;
    return j;
}

json to_json(const SynthArgs& a) {
    return json{{"out", a.out},
                {"profile", a.profile},
                {"n-tiles", a.n_tiles},
                {"size-px", a.size_px.value_or(lookup_profile(a.profile).size_px)},
                {"seed", a.seed},
                {"sites-min", a.sites_min},
                {"sites-max", a.sites_max},
                {"farm-fraction", a.farm_fraction},
                {"noise-sigma", a.noise_sigma},
                {"cell-drift", a.cell_drift},
                {"slot-offsets", a.slot_offsets},
                {"palette-size", a.palette_size},
                {"cloud-prob", a.cloud_prob},
                {"cloud-radius-min", a.cloud_radius_min},
                {"cloud-radius-max", a.cloud_radius_max},
                {"cloud-allow-slot1", a.cloud_allow_slot1},
                {"jobs", a.jobs}};
}

json to_json(const TrainArgs& a) {
    const auto p = lookup_profile(a.profile);
    json j{{"data", a.data},
           {"out", a.out},
           {"profile", a.profile},
           {"variant", a.variant},
           {"task", a.task},
           {"loss", a.loss},
           {"epochs", a.epochs.value_or(p.epochs)},
           {"lr", a.lr},
           {"batch", a.batch},
           {"seed", a.seed},
           {"base-filters", a.base_filters.value_or(p.base_filters)},
           {"depth", a.depth},
           {"checkpoint-every", a.checkpoint_every},
           {"resume", a.resume}};
    if (!a.pretrained_weights.empty()) j["pretrained-weights"] = a.pretrained_weights;
    return j;
}

json to_json(const EvalArgs& a) {
    json j{{"checkpoint", a.checkpoint}, {"data", a.data},           {"split", a.split},
           {"aggregation", a.aggregation}, {"threshold", a.threshold}, {"overlays", a.overlays}};
    if (!a.out.empty()) j["out"] = a.out;
    return j;
}

json to_json(const PredictArgs& a) {
    return json{{"checkpoint", a.checkpoint}, {"data", a.data},           {"tile", a.tile},
                {"out", a.out},               {"threshold", a.threshold}};
}

int cmd_build_dataset(const BuildDatasetArgs& a, std::ostream& out) {
    if (a.shapefile.empty() == a.geojson.empty()) {
        throw ConfigError("exactly one of --shapefile or --geojson is required");
    }
    if (a.n_tiles == 0) throw ConfigError("--n-tiles must be >= 1");
    if (a.size_px < 1) throw ConfigError("--size-px must be >= 1");
    const fs::path out_dir = a.out;
    ensure_dir(out_dir);

    const auto parcels = load_parcels(a);
    spdlog::info("parsed {} parcels", parcels.size());
    if (parcels.empty()) throw DataError("the vector file holds no polygons");
    const std::size_t attempts = a.max_attempts ? a.max_attempts : 50 * a.n_tiles;
    std::vector<geodata::TileFootprint> tiles;
    try {
        tiles = geodata::sample_tile_centers(parcels, a.n_tiles, a.seed, attempts);
    } catch (const CapacityError& e) {
        throw CapacityError(std::string(e.what()) + "; only " + std::to_string(e.accepted()) + " of " +
                                std::to_string(a.n_tiles) +
                                " non-overlapping footprints fit. Lower --n-tiles or raise --max-attempts.",
                            e.accepted());
    }

    enum class Outcome { Written, MissingSlot1, SizeMismatch, MasksOnly };
    std::vector<Outcome> outcome(tiles.size(), Outcome::MasksOnly);
    std::vector<dataset::TileEntry> entries(tiles.size());
    parallel_for(tiles.size(), a.jobs, [&](std::size_t i) {
        const auto& tile = tiles[i];
        const auto local = geodata::filter_parcels(parcels, tile);
        const auto boundary = raster::render_boundary_mask(tile, local, a.size_px);
        const auto area = raster::render_area_mask(tile, local, a.size_px);
        auto& e = entries[i];
        e.tile_id = tile.tile_id;
        e.boundary = dataset::boundary_filename(tile.tile_id);
        e.area = dataset::area_filename(tile.tile_id);
        imageio::save_mask_png(out_dir / e.boundary, boundary);
        imageio::save_mask_png(out_dir / e.area, area);
        if (a.images_dir.empty()) return;

        const fs::path src_ref = fs::path(a.images_dir) / dataset::image_filename(tile.tile_id, dataset::kReferenceSlot);
        if (!fs::exists(src_ref)) {
            outcome[i] = Outcome::MissingSlot1;
            return;
        }
        for (std::size_t s = 0; s < dataset::kSlotCount; ++s) {
            const auto name = dataset::image_filename(tile.tile_id, s);
            const fs::path src = fs::path(a.images_dir) / name;
            if (!fs::exists(src)) continue;
            const auto img = imageio::load_rgb_png(src);
            if (img.width != a.size_px || img.height != a.size_px) {
                outcome[i] = Outcome::SizeMismatch;
                return;
            }
            e.images[s] = name;
        }
        for (std::size_t s = 0; s < dataset::kSlotCount; ++s) {
            if (!e.images[s]) continue;
            fs::copy_file(fs::path(a.images_dir) / *e.images[s], out_dir / *e.images[s],
                          fs::copy_options::overwrite_existing);
        }
        outcome[i] = Outcome::Written;
    });

    json footprints = json::array();
    for (const auto& t : tiles) {
        footprints.push_back(json{{"tile_id", t.tile_id},
                                  {"center", {t.center.lon_deg, t.center.lat_deg}},
                                  {"side_m", t.side_m},
                                  {"bbox", {t.bbox_deg.lon_min, t.bbox_deg.lat_min, t.bbox_deg.lon_max, t.bbox_deg.lat_max}}});
    }
    write_text(out_dir / "tiles.json", footprints.dump(2) + "\n");
    write_effective_config(a.out, "build-dataset", to_json(a));

    std::size_t missing = 0, mismatched = 0;
    dataset::DatasetManifest manifest;
    manifest.size_px = a.size_px;
    manifest.seed = a.seed;
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        switch (outcome[i]) {
            case Outcome::Written: manifest.tiles.push_back(entries[i]); break;
            case Outcome::MissingSlot1:
                ++missing;
                spdlog::warn("tile {}: no Slot1 image, skipped", tiles[i].tile_id);
                break;
            case Outcome::SizeMismatch:
                ++mismatched;
                spdlog::warn("tile {}: image size differs from {} px, skipped", tiles[i].tile_id, a.size_px);
                break;
            case Outcome::MasksOnly: break;
        }
    }
    out << "footprints sampled: " << tiles.size() << "\n";
    if (a.images_dir.empty()) {
        out << "no --images-dir given: wrote masks and tiles.json only\n";
        return 0;
    }
    if (manifest.tiles.size() >= 10) {
        manifest = dataset::split_dataset(std::move(manifest), a.seed);
    } else {
        spdlog::warn("only {} usable tiles; manifest written without a train/val/test split", manifest.tiles.size());
    }
    dataset::save_manifest(out_dir / "manifest.json", manifest);
    out << "tiles written: " << manifest.tiles.size() << "\n"
        << "skipped (missing Slot1 image): " << missing << "\n"
        << "skipped (image size mismatch): " << mismatched << "\n";
    return 0;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    const auto profile = lookup_profile(a.profile);
    synth::SynthConfig cfg;
    cfg.n_tiles = a.n_tiles;
    cfg.size_px = a.size_px.value_or(profile.size_px);
    cfg.seed = a.seed;
    cfg.sites_min = a.sites_min;
    cfg.sites_max = a.sites_max;
    cfg.farm_fraction = a.farm_fraction;
    cfg.noise_sigma = a.noise_sigma;
    cfg.cell_drift = a.cell_drift;
    if (a.slot_offsets.size() != dataset::kSlotCount) throw ConfigError("--slot-offsets takes exactly 3 values");
    for (std::size_t s = 0; s < dataset::kSlotCount; ++s) cfg.slot_offsets[s] = a.slot_offsets[s];
    cfg.palette_size = a.palette_size;
    cfg.cloud.probability = a.cloud_prob;
    cfg.cloud.radius_min = a.cloud_radius_min;
    cfg.cloud.radius_max = a.cloud_radius_max;
    cfg.cloud.allow_slot1 = a.cloud_allow_slot1;
    synth::validate(cfg);

    const auto result = synth::generate(cfg, a.out, a.jobs);
    write_effective_config(a.out, "synth", to_json(a));
    std::size_t clouded = 0;
    for (const auto& c : result.clouds) clouded += c.applied ? 1 : 0;
    out << "synthetic tiles: " << result.manifest.tiles.size() << " (" << clouded << " with a cloud)\n";
    return 0;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const auto profile = lookup_profile(a.profile);
    const auto variant = parse_variant(a.variant);
    const auto task = parse_task(a.task);
    train::TrainConfig cfg;
    cfg.learning_rate = a.lr;
    cfg.batch_size = a.batch;
    cfg.epochs = a.epochs.value_or(profile.epochs);
    cfg.loss = train::parse_loss(a.loss);
    cfg.seed = a.seed;
    cfg.checkpoint_every = a.checkpoint_every;
    train::validate(cfg);

    const fs::path data_dir = a.data;
    const auto manifest = dataset::load_manifest(data_dir / "manifest.json");
    const auto train_set = dataset::load_samples(manifest, data_dir, dataset::Split::Train);
    const auto val_set = dataset::load_samples(manifest, data_dir, dataset::Split::Val);
    if (train_set.empty() || val_set.empty()) {
        throw DataError("dataset '" + a.data + "' needs non-empty train and val splits");
    }
    spdlog::info("train {} tiles, val {} tiles", train_set.size(), val_set.size());

    const auto mcfg = model::default_config(variant, static_cast<std::size_t>(manifest.size_px),
                                            a.base_filters.value_or(profile.base_filters), a.depth);
    model::UNet<float> net(variant, mcfg, a.seed);
    if (!a.pretrained_weights.empty()) {
        const auto report = model::load_weights(net, a.pretrained_weights, true);
        spdlog::info("pretrained weights: {} entries loaded, {} model entries left at initialization, {} file "
                     "entries unused",
                     report.loaded, report.missing.size(), report.unused.size());
    }
    ensure_dir(a.out);
    write_effective_config(a.out, "train", to_json(a));

    train::TrainOptions opt;
    opt.task = task;
    opt.checkpoint_dir = a.out;
    opt.resume = a.resume;
    opt.on_epoch = [&](const train::EpochRecord& r) {
        spdlog::info("epoch {}/{}: train loss {:.5f}, val dice {}, val acc {:.4f}", r.epoch, cfg.epochs, r.train_loss,
                     r.val_dice ? fmt::format("{:.4f}", *r.val_dice) : std::string("n/a"), r.val_acc);
    };
    const auto result = train::train(net, train_set, val_set, cfg, opt);

    json hist = json::array();
    for (const auto& r : result.history) {
        hist.push_back(json{{"epoch", r.epoch},
                            {"train_loss", r.train_loss},
                            {"val_dice", r.val_dice ? json(*r.val_dice) : json(nullptr)},
                            {"val_acc", r.val_acc}});
    }
    write_text(fs::path(a.out) / "history.json", hist.dump(2) + "\n");
    char buf[128];
    std::snprintf(buf, sizeof buf, "best epoch %zu, val dice %s\n", result.best_epoch,
                  result.best_val_dice ? std::to_string(*result.best_val_dice).c_str() : "n/a");
    out << buf;
    return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.checkpoint.empty()) throw ConfigError("--checkpoint is required");
    eval::EvalOptions opt;
    opt.aggregation = eval::parse_aggregation(a.aggregation);
    opt.threshold = a.threshold;
    if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw ConfigError("--threshold must lie in [0, 1]");
    const auto split = dataset::parse_split(a.split);
    const fs::path data_dir = a.data;
    const auto manifest = dataset::load_manifest(data_dir / "manifest.json");
    const auto samples = dataset::load_samples(manifest, data_dir, split);
    if (samples.empty()) throw ConfigError("split '" + a.split + "' holds no tiles");

    eval::MetricsReport report;
    report.aggregation = opt.aggregation;
    report.threshold = opt.threshold;
    if (!a.out.empty()) ensure_dir(a.out);
    for (const auto& ck : a.checkpoint) {
        const auto meta = train::read_checkpoint_meta(ck);
        auto net = train::model_from_checkpoint(ck);
        std::size_t written = 0;
        eval::PredictionSink sink;
        if (!a.out.empty() && a.overlays > 0) {
            const fs::path dir = fs::path(a.out) / "overlays";
            ensure_dir(dir);
            sink = [&, dir](const dataset::Sample& s, std::span<const float>, const raster::Mask& pred) {
                if (written >= a.overlays) return;
                const auto img = eval::make_overlay(s.images[dataset::kReferenceSlot], pred, s.mask(meta.task));
                char name[128];
                std::snprintf(name, sizeof name, "%s_%s_%d.png", std::string(to_string(meta.variant)).c_str(),
                              std::string(to_string(meta.task)).c_str(), s.tile_id);
                imageio::save_rgb_png(dir / name, img);
                ++written;
            };
        }
        const auto metrics = eval::evaluate(net, samples, meta.task, opt, sink);
        report.entries.push_back({meta.variant, meta.task, metrics});
        if (metrics.undefined_dice > 0) {
            spdlog::warn("{} / {}: Dice undefined on {} of {} tiles (no positives predicted or present)",
                         to_string(meta.variant), to_string(meta.task), metrics.undefined_dice, metrics.images);
        }
    }
    const auto table = eval::format_table(report);
    const auto js = eval::report_to_json(report);
    out << table;
    if (a.out.empty()) {
        out << js << "\n";
    } else {
        write_text(fs::path(a.out) / "metrics.json", js + "\n");
        write_text(fs::path(a.out) / "table.txt", table);
        write_effective_config(a.out, "eval", to_json(a));
    }
    return 0;
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    if (!(a.threshold >= 0.0 && a.threshold <= 1.0)) throw ConfigError("--threshold must lie in [0, 1]");
    const auto meta = train::read_checkpoint_meta(a.checkpoint);
    auto net = train::model_from_checkpoint(a.checkpoint);
    const fs::path data_dir = a.data;
    const auto manifest = dataset::load_manifest(data_dir / "manifest.json");
    const dataset::TileEntry* row = nullptr;
    for (const auto& t : manifest.tiles) {
        if (t.tile_id == a.tile) row = &t;
    }
    if (!row) throw DataError("tile " + std::to_string(a.tile) + " is not in " + (data_dir / "manifest.json").string());
    const auto sample = dataset::assemble_sample(*row, data_dir);
    auto x = dataset::to_input_tensor(sample, meta.variant);
    const auto shape = x.shape();
    const auto probs = net.predict(x.reshaped({1, shape[0], shape[1], shape[2]}));

    const int w = sample.width();
    const int h = sample.height();
    std::vector<std::uint8_t> gray(static_cast<std::size_t>(w * h));
    for (std::size_t i = 0; i < gray.size(); ++i) {
        gray[i] = static_cast<std::uint8_t>(std::lround(std::clamp(probs[i], 0.0f, 1.0f) * 255.0f));
    }
    const auto mask = eval::threshold(std::span<const float>(probs.raw(), gray.size()), w, h, a.threshold);
    ensure_dir(a.out);
    const std::string stem = std::to_string(a.tile) + "_" + std::string(to_string(meta.task));
    imageio::save_gray_png(fs::path(a.out) / (stem + "_prob.png"), w, h, gray);
    imageio::save_mask_png(fs::path(a.out) / (stem + "_mask.png"), mask);
    write_effective_config(a.out, "predict", to_json(a));
    out << (fs::path(a.out) / (stem + "_prob.png")).string() << "\n"
        << (fs::path(a.out) / (stem + "_mask.png")).string() << "\n";
    return 0;
}

int cmd_project(const ProjectArgs& a, std::ostream& out) {
    if (a.coords.size() != 2) throw ConfigError("project takes exactly two coordinates");
    char buf[96];
    if (a.from == "lambert93" && a.to == "wgs84") {
        const auto g = geodata::lambert93_to_wgs84({a.coords[0], a.coords[1]});
        std::snprintf(buf, sizeof buf, "%.6f %.6f\n", g.lon_deg, g.lat_deg);
    } else if (a.from == "wgs84" && a.to == "lambert93") {
        const auto p = geodata::wgs84_to_lambert93({a.coords[0], a.coords[1]});
        std::snprintf(buf, sizeof buf, "%.6f %.6f\n", p.easting_m, p.northing_m);
    } else {
        throw ConfigError("unsupported projection pair " + a.from + " -> " + a.to +
                          " (supported: lambert93 <-> wgs84)");
    }
    out << buf;
    return 0;
}

}  // namespace parceldelin::cli
