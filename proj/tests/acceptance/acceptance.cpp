// Acceptance checks. Each criterion runs on its own when its number is given
// on the command line (all of them otherwise) and prints one PASS/FAIL line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <vector>

#include "parceldelin/cli/cli.hpp"
#include "parceldelin/common/error.hpp"
#include "parceldelin/common/rng.hpp"
#include "parceldelin/dataset/dataset.hpp"
#include "parceldelin/eval/evaluate.hpp"
#include "parceldelin/eval/metrics.hpp"
#include "parceldelin/geodata/projection.hpp"
#include "parceldelin/geodata/shapefile.hpp"
#include "parceldelin/geodata/tiles.hpp"
#include "parceldelin/imageio/png.hpp"
#include "parceldelin/model/unet.hpp"
#include "parceldelin/model/weights.hpp"
#include "parceldelin/nn/grad_check.hpp"
#include "parceldelin/nn/ops.hpp"
#include "parceldelin/raster/draw.hpp"
#include "parceldelin/raster/render.hpp"
#include "parceldelin/synth/synth.hpp"
#include "parceldelin/train/loss.hpp"
#include "parceldelin/train/trainer.hpp"

using namespace parceldelin;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag)
        : path_(fs::temp_directory_path() / ("parceldelin_accept_" + tag + "_" + std::to_string(::getpid()))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int rc = cli::run(std::move(args), out, err);
    if (rc != 0) std::fprintf(stderr, "cli failed (%d): %s\n", rc, err.str().c_str());
    return rc;
}

template <typename T>
nn::Tensor<T> random_tensor(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    nn::Tensor<T> t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

raster::Mask random_mask(Rng& rng, int w, int h, double p) {
    raster::Mask m(w, h);
    for (auto& b : m.bits()) b = rng.uniform() < p ? 1 : 0;
    return m;
}

// ---------------------------------------------------------------- 1: metrics

Outcome metric_oracle() {
    Rng rng(1);
    std::size_t mismatches = 0;
    for (int t = 0; t < 1000; ++t) {
        const auto pred = random_mask(rng, 16, 16, rng.uniform());
        const auto gt = random_mask(rng, 16, 16, rng.uniform());
        std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < 256; ++i) {
            const bool p = pred.bits()[i], g = gt.bits()[i];
            tp += p && g;
            fp += p && !g;
            fn += !p && g;
            tn += !p && !g;
        }
        const auto c = eval::confusion(pred, gt);
        if (!(c == eval::ConfusionCounts{tp, fp, fn, tn})) ++mismatches;
        const auto d = eval::dice(c);
        const std::uint64_t den = 2 * tp + fp + fn;
        if (den == 0 ? d.has_value() : (!d || *d != static_cast<double>(2 * tp) / static_cast<double>(den))) ++mismatches;
        if (eval::accuracy(c) != static_cast<double>(tp + tn) / 256.0) ++mismatches;
    }
    const double example = *eval::dice({2, 1, 1, 0});
    const bool example_ok = std::abs(example - 0.6667) < 5e-5;
    return {mismatches == 0 && example_ok,
            fmt("%zu mismatches over 1000 pairs; dice(tp=2,fp=1,fn=1) = %.4f", mismatches, example)};
}

// ------------------------------------------------------------- 2: rasterizer

// Even-odd test of the pixel centre with a ray toward -x, in exact integers.
bool ray_cast_inside(const raster::PixelPolygon& poly, long long c, long long r) {
    bool in = false;
    auto ring_test = [&](const raster::PixelRing& ring) {
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const auto& a = ring[i];
            const auto& b = ring[(i + 1) % ring.size()];
            if ((2 * a.row > 2 * r + 1) == (2 * b.row > 2 * r + 1)) continue;
            const long long D = b.row - a.row;
            const long long lhs = 2 * a.col * D + (2 * r + 1 - 2 * a.row) * (b.col - a.col);
            const long long rhs = (2 * c + 1) * D;
            if (D > 0 ? lhs < rhs : lhs > rhs) in = !in;
        }
    };
    ring_test(poly.outer);
    for (const auto& h : poly.holes) ring_test(h);
    return in;
}

raster::PixelRing star_ring(Rng& rng, double cx, double cy, double rmin, double rmax, int n) {
    raster::PixelRing ring;
    for (int i = 0; i < n; ++i) {
        const double ang = 2.0 * M_PI * (i + rng.uniform(0.0, 0.8)) / n;
        const double rad = rng.uniform(rmin, rmax);
        ring.push_back({std::llround(cx + rad * std::cos(ang)), std::llround(cy + rad * std::sin(ang))});
    }
    return raster::collapse_ring(ring);
}

Outcome rasterizer_oracle() {
    Rng rng(2);
    const int W = 64, H = 64;
    std::size_t polygons = 0, bad_fill = 0;
    while (polygons < 200) {
        raster::PixelPolygon poly;
        const double cx = rng.uniform(0.0, W), cy = rng.uniform(0.0, H), R = rng.uniform(8.0, 40.0);
        const bool convex = polygons % 2 == 0;
        poly.outer = convex ? star_ring(rng, cx, cy, R, R, 3 + static_cast<int>(rng.uniform_index(12)))
                            : star_ring(rng, cx, cy, 0.3 * R, R, 5 + static_cast<int>(rng.uniform_index(20)));
        poly.holes.push_back(star_ring(rng, cx, cy, 0.05 * R, 0.25 * R, 3 + static_cast<int>(rng.uniform_index(8))));
        if (poly.outer.size() < 3 || raster::twice_signed_area(poly.outer) == 0) continue;
        if (poly.holes[0].size() < 3 || raster::twice_signed_area(poly.holes[0]) == 0) continue;
        ++polygons;
        raster::Mask m(W, H);
        raster::fill_polygon(m, poly);
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) bad_fill += (m.get(c, r) == 1) != ray_cast_inside(poly, c, r);
    }

    // Boundary masks: every projected edge walked with Bresenham and stamped
    // 2x2 at each step, compared with the renderer.
    std::size_t bad_boundary = 0, frame_errors = 0;
    const auto tile = geodata::make_tile(0, {3.0, 46.5});
    const auto& b = tile.bbox_deg;
    for (int t = 0; t < 50; ++t) {
        std::vector<geodata::ParcelRecord> parcels(1 + rng.uniform_index(4));
        for (auto& p : parcels) {
            const int n = 3 + static_cast<int>(rng.uniform_index(8));
            const double px = rng.uniform(b.lon_min, b.lon_max), py = rng.uniform(b.lat_min, b.lat_max);
            for (int k = 0; k < n; ++k) {
                const double a = 2 * M_PI * k / n;
                p.polygon.outer.push_back({px + 0.4 * (b.lon_max - b.lon_min) * rng.uniform(0.2, 1.0) * std::cos(a),
                                           py + 0.4 * (b.lat_max - b.lat_min) * rng.uniform(0.2, 1.0) * std::sin(a)});
            }
        }
        raster::Mask expect(96, 96);
        for (const auto& p : parcels) {
            raster::PixelRing ring;
            for (const auto& g : p.polygon.outer) ring.push_back(geodata::geo_to_pixel(tile, g, 96));
            for (std::size_t i = 0; i < ring.size(); ++i)
                for (const auto& px : raster::bresenham_line(ring[i], ring[(i + 1) % ring.size()]))
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) expect.set_clipped(px.col + dx, px.row + dy);
        }
        if (!(raster::render_boundary_mask(tile, parcels, 96) == expect)) ++bad_boundary;
    }
    // A horizontal edge is exactly two pixels thick.
    raster::Mask line(16, 16);
    raster::draw_segment_thick2(line, {0, 5}, {9, 5});
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) frame_errors += line.get(c, r) != ((r == 5 || r == 6) && c <= 10);
    return {bad_fill == 0 && bad_boundary == 0 && frame_errors == 0,
            fmt("%zu fill mismatches on 200 polygons with holes; %zu/50 boundary renders differ from "
                "brute-force stamping; %zu stripe errors",
                bad_fill, bad_boundary, frame_errors)};
}

// ------------------------------------------------------------- 3: gradients

Outcome gradient_suite() {
    using nn::Tape;
    using nn::Var;
    Rng rng(3);
    double worst = 0.0;
    std::string worst_name;
    auto record = [&](const std::string& name, const nn::GradCheckResult& r) {
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            worst_name = name + ":" + r.worst_param;
        }
    };
    std::size_t kinks = 0, checked = 0;
    auto probe = [](Tape<double>& t, const Var<double>& y, const nn::Tensor<double>& w) {
        return nn::sum(t, nn::mul(t, y, nn::constant(w)));
    };
    auto param = [&](nn::Shape s, double lo = -1.0, double hi = 1.0) {
        return nn::parameter(random_tensor<double>(std::move(s), rng, lo, hi));
    };

    for (std::size_t stride : {1, 2})
        for (std::size_t pad : {0, 1, 2})
            for (std::size_t dil : {1, 2}) {
                auto x = param({2, 2, 9, 9}), w = param({3, 2, 3, 3}), bias = param({3});
                const nn::ConvParams p{stride, pad, dil};
                const auto e = nn::conv_output_extent(9, 3, p);
                const auto pw = random_tensor<double>({2, 3, e, e}, rng);
                record("conv2d", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::conv2d(t, x, w, bias, p), pw); },
                                                {{"x", x}, {"w", w}, {"b", bias}}, 1e-6));
            }
    {
        auto x = param({2, 3, 6, 6});
        const auto w3 = random_tensor<double>({2, 3, 3, 3}, rng), w12 = random_tensor<double>({2, 3, 12, 12}, rng),
                   w6 = random_tensor<double>({2, 3, 6, 6}, rng);
        record("maxpool2x", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::maxpool2x(t, x), w3); }, {{"x", x}}, 1e-6));
        record("upsample", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::upsample_nearest2x(t, x), w12); }, {{"x", x}}, 1e-6));
        record("relu", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::relu(t, x), w6); }, {{"x", x}}, 1e-6));
        record("sigmoid", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::sigmoid(t, x), w6); }, {{"x", x}}, 1e-6));
        auto y = param({2, 3, 6, 6}), z = param({2, 2, 6, 6});
        const auto w5 = random_tensor<double>({2, 5, 6, 6}, rng);
        record("concat", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::concat_channels(t, x, z), w5); }, {{"x", x}, {"z", z}}, 1e-6));
        record("add", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::add(t, x, y), w6); }, {{"x", x}, {"y", y}}, 1e-6));
        record("mul", nn::grad_check([&](Tape<double>& t) { return probe(t, nn::mul(t, x, y), w6); }, {{"x", x}, {"y", y}}, 1e-6));
        record("mean", nn::grad_check([&](Tape<double>& t) { return nn::mean(t, nn::mul(t, x, y)); }, {{"x", x}, {"y", y}}, 1e-6));
        auto g = param({3}, 0.5, 1.5), be = param({3});
        nn::BatchNormStats<double> stats(3);
        record("batchnorm(train)",
               nn::grad_check([&](Tape<double>& t) { return probe(t, nn::batchnorm2d(t, x, g, be, stats, nn::BatchNormMode::Train), w6); },
                              {{"x", x}, {"gamma", g}, {"beta", be}}, 1e-6));
        record("batchnorm(eval)",
               nn::grad_check([&](Tape<double>& t) { return probe(t, nn::batchnorm2d(t, x, g, be, stats, nn::BatchNormMode::Eval), w6); },
                              {{"x", x}, {"gamma", g}, {"beta", be}}, 1e-6));
        nn::Tensor<double> target(nn::Shape{2, 3, 6, 6});
        for (auto& v : target.data()) v = rng.uniform_index(2) ? 1.0 : 0.0;
        auto p = param({2, 3, 6, 6}, 0.05, 0.95);
        record("bce", nn::grad_check([&](Tape<double>& t) { return train::bce_loss(t, p, target); }, {{"p", p}}, 1e-6));
        record("soft_dice", nn::grad_check([&](Tape<double>& t) { return train::soft_dice_loss(t, p, target); }, {{"p", p}}, 1e-6));
    }
    for (auto v : {ModelVariant::Spatial, ModelVariant::SpatioTemporal, ModelVariant::SpatioTemporalPretrained}) {
        model::UNet<double> m(v, model::default_config(v, 16, 4, 2), 7);
        const auto x = nn::constant(random_tensor<double>({2, model::variant_input_channels(v), 16, 16}, rng, 0.0, 1.0));
        // A random linear probe of the output rather than a mean loss keeps
        // gradients well above the roundoff floor of the central difference.
        const auto w = random_tensor<double>({2, 1, 16, 16}, rng);
        const auto r = nn::grad_check(
            [&](Tape<double>& t) { return probe(t, m.forward(t, x, nn::BatchNormMode::Train), w); },
            m.parameters(), 1e-6,
            [&](std::size_t pi, std::size_t e) {
                const std::size_t n = m.parameters()[pi].var->value.numel();
                return e % std::max<std::size_t>(1, n / 48) != 0;
            },
            true);
        kinks += r.kinks;
        checked += r.checked;
        record(std::string("unet/") + std::string(to_string(v)), r);
    }
    // Relu and max switches inside the probe interval are rare; a large share
    // of dropped elements would mean the guard is hiding something.
    const bool few_kinks = kinks * 50 < checked + kinks;
    return {worst < 1e-3 && few_kinks,
            fmt("max relative error %.3g (%s), tolerance 1e-3; U-Net: %zu elements checked, %zu dropped at kinks",
                worst, worst_name.c_str(), checked, kinks)};
}

// ------------------------------------------------------------ 4: projection

Outcome projection() {
    const auto o = geodata::wgs84_to_lambert93({3.0, 46.5});
    const double origin_err = std::hypot(o.easting_m - 700000.0, o.northing_m - 6600000.0);
    Rng rng(4);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const geodata::LambertPoint p{rng.uniform(0.0, 1.3e6), rng.uniform(6.0e6, 7.2e6)};
        const auto q = geodata::wgs84_to_lambert93(geodata::lambert93_to_wgs84(p));
        worst = std::max(worst, std::hypot(q.easting_m - p.easting_m, q.northing_m - p.northing_m));
    }
    // EPSG:2154 -> EPSG:4326 reference computed with PROJ 9.5.1.
    const auto g = geodata::lambert93_to_wgs84({650000.0, 6860000.0});
    const double ref_err = std::max(std::abs(g.lon_deg - 2.3187905970), std::abs(g.lat_deg - 48.8381101226));
    return {origin_err < 1e-3 && worst < 1e-3 && ref_err < 1e-7,
            fmt("origin error %.2e m; round-trip max %.2e m over 1000 points; reference error %.2e deg", origin_err,
                worst, ref_err)};
}

// ---------------------------------------------------------- 5: overfit check

constexpr int kDeskSize = 96;
constexpr std::size_t kDeskBase = 8;
constexpr std::size_t kDeskEpochs = 30;

Outcome overfit() {
    ScratchDir dir("overfit");
    synth::SynthConfig sc;
    sc.n_tiles = 4;
    sc.size_px = kDeskSize;
    sc.seed = 7;
    const auto res = synth::generate(sc, dir.path() / "data", 1);
    const auto samples = dataset::load_samples(res.manifest, dir.path() / "data", std::nullopt);
    const auto v = ModelVariant::Spatial;
    model::UNet<float> m(v, model::default_config(v, kDeskSize, kDeskBase), 1);
    train::TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.epochs = 200;
    tc.seed = 1;
    train::TrainOptions opt;
    opt.checkpoint_dir = dir.path() / "ck";
    opt.max_epochs_this_run = 10;
    // Ten epochs at a time, resuming from the checkpoint, so the run can stop
    // as soon as the target is met; resumption is bit-exact.
    double best = 0.0;
    std::size_t best_epoch = 0, epochs_run = 0;
    while (epochs_run < tc.epochs && best <= 0.9) {
        const auto r = train::train(m, samples, samples, tc, opt);
        opt.resume = true;
        for (const auto& e : r.history) {
            epochs_run = std::max(epochs_run, e.epoch);
            if (e.val_dice && *e.val_dice > best) {
                best = *e.val_dice;
                best_epoch = e.epoch;
            }
        }
    }
    return {best > 0.9, fmt("train boundary Dice %.4f at epoch %zu (4 tiles, lr 1e-3, batch 6)", best, best_epoch)};
}

// ------------------------------------------------ 6: spatio-temporal advantage

// Synthetic landscape for the cloud experiment. With two Slot1 colours per
// tile many neighbouring parcels can only be told apart in slots 0 and 2.
synth::SynthConfig temporal_config(std::uint64_t seed) {
    synth::SynthConfig sc;
    sc.n_tiles = 200;
    sc.size_px = kDeskSize;
    sc.palette_size = 2;
    sc.cloud.probability = 0.5;
    sc.seed = seed;
    return sc;
}

double held_out_dice(model::UNet<float>& m, std::span<const dataset::Sample> test) {
    return eval::evaluate(m, test, Task::Boundary).dice.value_or(0.0);
}

Outcome temporal_advantage() {
    std::vector<double> margins;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
        ScratchDir dir("temporal_" + std::to_string(seed));
        const auto res = synth::generate(temporal_config(seed), dir.path() / "data", 1);
        const auto tr = dataset::load_samples(res.manifest, dir.path() / "data", dataset::Split::Train);
        const auto va = dataset::load_samples(res.manifest, dir.path() / "data", dataset::Split::Val);
        const auto te = dataset::load_samples(res.manifest, dir.path() / "data", dataset::Split::Test);
        std::map<ModelVariant, double> dice;
        for (auto v : {ModelVariant::Spatial, ModelVariant::SpatioTemporal}) {
            model::UNet<float> m(v, model::default_config(v, kDeskSize, kDeskBase), seed);
            train::TrainConfig tc;
            tc.learning_rate = 1e-3;
            tc.epochs = kDeskEpochs;
            tc.seed = seed;
            train::TrainOptions opt;
            opt.checkpoint_dir = dir.path() / std::string(to_string(v));
            train::train(m, tr, va, tc, opt);
            auto best = train::model_from_checkpoint(opt.checkpoint_dir / "best");
            dice[v] = held_out_dice(best, te);
        }
        const double margin = dice[ModelVariant::SpatioTemporal] - dice[ModelVariant::Spatial];
        margins.push_back(margin);
        const auto line = fmt("seed %llu: spatial %.4f, spatio-temporal %.4f, margin %+.4f; ",
                              static_cast<unsigned long long>(seed), dice[ModelVariant::Spatial],
                              dice[ModelVariant::SpatioTemporal], margin);
        std::fprintf(stderr, "%s\n", line.c_str());
        detail += line;
    }
    std::sort(margins.begin(), margins.end());
    const double median = margins[1];
    return {median >= 0.03, detail + fmt("median margin %+.4f (required >= 0.03)", median)};
}

// ------------------------------------------------- 7: missing-image handling

Outcome missing_slot0() {
    ScratchDir dir("missing");
    const auto data = dir.path() / "data";
    synth::SynthConfig sc;
    sc.n_tiles = 50;
    sc.size_px = 32;
    sc.seed = 5;
    auto manifest = synth::generate(sc, data, 1).manifest;
    for (auto& t : manifest.tiles) {
        fs::remove(data / *t.images[0]);
        t.images[0].reset();
    }
    dataset::save_manifest(data / "manifest.json", manifest);

    std::size_t unequal = 0, flagged = 0;
    const auto samples = dataset::load_samples(manifest, data, std::nullopt);
    for (const auto& s : samples) {
        flagged += s.substituted[0] && !s.substituted[1] && !s.substituted[2];
        const auto x = dataset::to_input_tensor(s, ModelVariant::SpatioTemporal);
        const std::size_t plane = static_cast<std::size_t>(s.width() * s.height());
        unequal += std::memcmp(x.raw(), x.raw() + 3 * plane, 3 * plane * sizeof(float)) != 0;
    }
    const int rc_train = run_cli({"train", "--data", data.string(), "--out", (dir.path() / "run").string(), "--variant",
                                  "spatiotemporal", "--epochs", "1", "--base-filters", "4", "--depth", "2"});
    const int rc_eval = run_cli({"eval", "--checkpoint", (dir.path() / "run/best").string(), "--data", data.string(),
                                 "--split", "test", "--out", (dir.path() / "eval").string()});
    return {samples.size() == 50 && unequal == 0 && flagged == 50 && rc_train == 0 && rc_eval == 0,
            fmt("%zu tiles, %zu with channels 0-2 != 3-5, %zu flagged substituted; train rc %d, eval rc %d",
                samples.size(), unequal, flagged, rc_train, rc_eval)};
}

// ------------------------------------------------------------ 8: determinism

Outcome determinism() {
    ScratchDir dir("determinism");
    const auto data = (dir.path() / "data").string();
    if (run_cli({"synth", "--profile", "desk", "--out", data, "--n-tiles", "20", "--seed", "8"}) != 0)
        return {false, "synth failed"};
    auto train_into = [&](const std::string& out) {
        return run_cli({"train", "--profile", "desk", "--data", data, "--out", out, "--epochs", "2", "--seed", "11"});
    };
    const auto a = dir.path() / "a", b = dir.path() / "b";
    if (train_into(a.string()) != 0 || train_into(b.string()) != 0) return {false, "train failed"};
    std::size_t differing = 0, compared = 0;
    for (const char* f : {"last.pswt", "last.json", "best.pswt", "best.json", "history.json"}) {
        ++compared;
        const auto x = slurp(a / f), y = slurp(b / f);
        differing += x.empty() || x != y;
    }
    std::size_t bad_splits = 0;
    for (std::size_t n : {10, 20, 57, 200, 2000}) {
        dataset::DatasetManifest m;
        m.size_px = 8;
        for (std::size_t i = 0; i < n; ++i) {
            dataset::TileEntry t;
            t.tile_id = static_cast<int>(i);
            t.images[1] = "x";
            m.tiles.push_back(t);
        }
        m = dataset::split_dataset(m, 3);
        const auto tr = dataset::tiles_in_split(m, dataset::Split::Train).size();
        const auto va = dataset::tiles_in_split(m, dataset::Split::Val).size();
        const auto te = dataset::tiles_in_split(m, dataset::Split::Test).size();
        bad_splits += tr != n * 8 / 10 || va != n / 10 || te != n - tr - va;
    }
    const auto synth_manifest = dataset::load_manifest(fs::path(data) / "manifest.json");
    bad_splits += dataset::tiles_in_split(synth_manifest, dataset::Split::Train).size() != 16;
    return {differing == 0 && bad_splits == 0,
            fmt("%zu of %zu checkpoint files differ between two identical train runs; %zu split size errors",
                differing, compared, bad_splits)};
}

// --------------------------------------------------------- 9: format round trips

template <typename F>
bool throws_format_error(F&& f) {
    try {
        f();
    } catch (const FormatError&) {
        return true;
    } catch (...) {
        return false;
    }
    return false;
}

Outcome format_round_trips() {
    Rng rng(9);
    std::vector<std::string> failures;
    // Shapefile: raw planar records survive writer -> parser unchanged.
    std::vector<geodata::ShapePolygon> polys;
    for (int i = 0; i < 50; ++i) {
        geodata::ShapePolygon p;
        p.record_number = i + 1;
        for (std::size_t r = 0; r < 1 + rng.uniform_index(3); ++r) {
            std::vector<geodata::ShapePoint> ring;
            for (std::size_t k = 0; k < 3 + rng.uniform_index(10); ++k)
                ring.push_back({rng.uniform(1e5, 1.2e6), rng.uniform(6.1e6, 7.1e6)});
            ring.push_back(ring.front());
            p.rings.push_back(ring);
        }
        polys.push_back(p);
    }
    const auto shp = geodata::write_shapefile_polygons(polys);
    if (geodata::read_shapefile_polygons(shp.main) != polys) failures.push_back("shapefile");
    if (geodata::read_shapefile_polygons(shp.main, std::span<const std::uint8_t>(shp.index)) != polys)
        failures.push_back("shapefile via index");
    if (geodata::write_shapefile_polygons(geodata::read_shapefile_polygons(shp.main)).main != shp.main)
        failures.push_back("shapefile bytes");
    auto bad_shp = shp.main;
    bad_shp[3] = static_cast<std::uint8_t>(bad_shp[3] + 1);  // file code 9994 -> 9995
    if (!throws_format_error([&] { geodata::read_shapefile_polygons(bad_shp); })) failures.push_back("shapefile magic");

    // Weight file.
    const auto v = ModelVariant::SpatioTemporalPretrained;
    model::UNet<float> m(v, model::default_config(v, 32, 4, 2), 3);
    const auto bytes = model::encode_weights(m.state());
    const auto state = m.state();
    const auto back = model::decode_weights(bytes);
    bool weights_ok = back.size() == state.size() && model::encode_weights(back) == bytes;
    for (std::size_t i = 0; weights_ok && i < back.size(); ++i) {
        const auto& a = back[i].values;
        const auto& b = state[i].values;
        weights_ok = back[i].name == state[i].name && back[i].dims == state[i].dims && a.size() == b.size() &&
                     std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
    }
    if (!weights_ok) failures.push_back("weights");
    auto bad_w = bytes;
    bad_w[0] = 'Q';
    if (!throws_format_error([&] { model::decode_weights(bad_w); })) failures.push_back("weights magic");

    // Manifest.
    ScratchDir dir("formats");
    synth::SynthConfig sc;
    sc.n_tiles = 12;
    sc.size_px = 32;
    const auto manifest = synth::generate(sc, dir.path(), 1).manifest;
    dataset::save_manifest(dir.path() / "copy.json", dataset::load_manifest(dir.path() / "manifest.json"));
    if (dataset::load_manifest(dir.path() / "copy.json") != manifest ||
        slurp(dir.path() / "copy.json") != slurp(dir.path() / "manifest.json"))
        failures.push_back("manifest");
    if (!throws_format_error([&] { dataset::manifest_from_json(R"({"version":1,"size_px":8,"seed":0,"tiles":[{}]})"); }))
        failures.push_back("manifest schema");
    // PNG signature.
    auto png = slurp(dir.path() / *manifest.tiles[0].images[1]);
    png[1] = 'Q';
    std::ofstream(dir.path() / "bad.png", std::ios::binary) << png;
    if (!throws_format_error([&] { imageio::load_rgb_png(dir.path() / "bad.png"); })) failures.push_back("png magic");

    std::string list;
    for (const auto& f : failures) list += " " + f;
    return {failures.empty(), failures.empty() ? "shapefile, weight file and manifest round trips bit-exact; corrupted "
                                                 "magic rejected with FormatError"
                                               : "failed:" + list};
}

// ------------------------------------------------------- 10: adapter arithmetic

Outcome adapter_arithmetic() {
    std::string detail;
    bool ok = true;
    for (auto [size, base] : {std::pair{96, std::size_t{8}}, {224, std::size_t{16}}}) {
        const auto a = model::UNet<float>(ModelVariant::SpatialPretrained,
                                          model::default_config(ModelVariant::SpatialPretrained, size, base))
                           .parameter_count();
        const auto b = model::UNet<float>(ModelVariant::SpatioTemporalPretrained,
                                          model::default_config(ModelVariant::SpatioTemporalPretrained, size, base))
                           .parameter_count();
        ok = ok && b == a + 30;
        detail += fmt("base %zu: %zu vs %zu (+%zu); ", base, b, a, b - a);
    }
    return {ok, detail + "expected +30 (9*3 weights + 3 biases)"};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;      // stated runtime limit
    bool four_core;       // the limit is stated for 4 cores
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "metric oracle", 5, false, metric_oracle},
    {2, "rasterizer oracle", 30, false, rasterizer_oracle},
    {3, "gradient suite", 120, false, gradient_suite},
    {4, "projection", 5, false, projection},
    {5, "overfit sanity", 600, true, overfit},
    {6, "spatio-temporal advantage under clouds", 2700, true, temporal_advantage},
    {7, "missing-image substitution", 60, false, missing_slot0},
    {8, "determinism", 600, true, determinism},
    {9, "format round trips", 5, false, format_round_trips},
    {10, "adapter arithmetic", 1, false, adapter_arithmetic},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
    // Budgets stated for 4 cores are scaled when fewer are available.
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    const double core_scale = cores >= 4 ? 1.0 : 4.0 / cores;

    int failed = 0;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double budget = c.budget_s * (c.four_core ? core_scale : 1.0);
        const bool in_time = secs < budget;
        const bool pass = o.pass && in_time;
        std::printf("[%s] criterion %d (%s): %s | %.1f s (limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, budget, in_time ? "" : ", exceeded");
        std::fflush(stdout);
        failed += !pass;
    }
    return failed == 0 ? 0 : 1;
}
