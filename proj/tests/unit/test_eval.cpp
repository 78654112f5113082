#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "parceldelin/common/error.hpp"
#include "parceldelin/eval/evaluate.hpp"
#include "parceldelin/eval/metrics.hpp"
#include "test_util.hpp"

using namespace parceldelin;
using namespace parceldelin::eval;

namespace {

raster::Mask random_mask(Rng& rng, int w, int h, double p = 0.5) {
    raster::Mask m(w, h);
    for (auto& b : m.bits()) b = rng.uniform() < p ? 1 : 0;
    return m;
}

raster::Mask from_bits(int w, int h, std::vector<std::uint8_t> bits) {
    raster::Mask m(w, h);
    m.bits() = std::move(bits);
    return m;
}

ConfusionCounts brute(const raster::Mask& p, const raster::Mask& g) {
    ConfusionCounts c;
    for (int r = 0; r < p.height(); ++r)
        for (int col = 0; col < p.width(); ++col) {
            const bool a = p.get(col, r), b = g.get(col, r);
            if (a && b) ++c.tp;
            else if (a) ++c.fp;
            else if (b) ++c.fn;
            else ++c.tn;
        }
    return c;
}

}  // namespace

TEST_CASE("threshold tie rule") {
    std::vector<float> half(12, 0.5f);
    CHECK(threshold(half, 4, 3).count() == 12);
    std::vector<float> p{0.0f, 0.2f, 0.49999f, 0.5f, 0.9f, 1.0f};
    CHECK(threshold(p, 3, 2, 0.0).count() == 6);
    const auto at1 = threshold(p, 3, 2, 1.0);
    CHECK(at1.count() == 1);
    CHECK(at1.get(2, 1) == 1);
    CHECK(threshold(p, 3, 2).bits() == std::vector<std::uint8_t>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("confusion counts against brute force") {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
        const auto a = random_mask(rng, 8, 8, rng.uniform()), b = random_mask(rng, 8, 8, rng.uniform());
        const auto c = confusion(a, b);
        CHECK(c == brute(a, b));
        CHECK(c.total() == 64);
        const auto e = brute(a, b);
        const auto d = dice(c);
        if (2 * e.tp + e.fp + e.fn == 0) {
            CHECK_FALSE(d.has_value());
        } else {
            CHECK(*d == static_cast<double>(2 * e.tp) / static_cast<double>(2 * e.tp + e.fp + e.fn));
        }
        CHECK(accuracy(c) == static_cast<double>(e.tp + e.tn) / 64.0);
    }
    const auto g = random_mask(rng, 8, 8);
    const auto same = confusion(g, g);
    CHECK(same.fp == 0);
    CHECK(same.fn == 0);
    raster::Mask inv(8, 8);
    for (std::size_t i = 0; i < 64; ++i) inv.bits()[i] = !g.bits()[i];
    const auto opp = confusion(inv, g);
    CHECK(opp.tp == 0);
    CHECK(opp.tn == 0);
    CHECK_THROWS_AS(confusion(raster::Mask(8, 8), raster::Mask(8, 7)), ShapeError);
}

TEST_CASE("Dice and accuracy examples") {
    CHECK(*dice({2, 1, 1, 0}) == doctest::Approx(0.6667).epsilon(1e-4));
    CHECK(*dice({5, 0, 0, 7}) == 1.0);
    CHECK(*dice({0, 3, 2, 1}) == 0.0);
    CHECK_FALSE(dice({0, 0, 0, 9}).has_value());
    // All-zero prediction against 10% positives.
    raster::Mask gt(10, 10), pred(10, 10);
    for (int c = 0; c < 10; ++c) gt.set(c, 0);
    CHECK(accuracy(confusion(pred, gt)) == doctest::Approx(0.9));
    CHECK(accuracy(confusion(gt, gt)) == 1.0);
    CHECK_THROWS_AS(accuracy({}), ConfigError);
}

TEST_CASE("F1 identity and permutation invariance") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        auto a = random_mask(rng, 12, 12, rng.uniform(0.1, 0.9)), b = random_mask(rng, 12, 12, rng.uniform(0.1, 0.9));
        const auto c = confusion(a, b);
        if (c.tp > 0) {
            const double prec = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
            const double rec = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
            CHECK(*dice(c) == doctest::Approx(2 * prec * rec / (prec + rec)).epsilon(1e-12));
        }
        std::vector<std::size_t> perm(144);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        raster::Mask pa(12, 12), pb(12, 12);
        for (std::size_t i = 0; i < 144; ++i) {
            pa.bits()[i] = a.bits()[perm[i]];
            pb.bits()[i] = b.bits()[perm[i]];
        }
        CHECK(confusion(pa, pb) == c);
    }
}

TEST_CASE("micro and macro aggregation") {
    // Hand-computed 2x2 toy set.
    const auto gt_a = from_bits(2, 2, {1, 1, 0, 0}), pr_a = from_bits(2, 2, {1, 0, 0, 0});
    const auto gt_b = from_bits(2, 2, {1, 0, 0, 0}), pr_b = from_bits(2, 2, {1, 1, 1, 0});
    const std::vector<ConfusionCounts> cs{confusion(pr_a, gt_a), confusion(pr_b, gt_b)};
    const auto micro = aggregate(cs, Aggregation::Micro);
    CHECK(*micro.dice == doctest::Approx(4.0 / 7.0));
    CHECK(micro.accuracy == doctest::Approx(5.0 / 8.0));
    const auto macro = aggregate(cs, Aggregation::Macro);
    CHECK(*macro.dice == doctest::Approx((2.0 / 3.0 + 0.5) / 2.0));
    CHECK(macro.accuracy == doctest::Approx((0.75 + 0.5) / 2.0));
    CHECK(micro.images == 2);

    // Undefined images are skipped by the macro Dice mean and counted.
    const std::vector<ConfusionCounts> with_empty{cs[0], ConfusionCounts{0, 0, 0, 4}};
    const auto m2 = aggregate(with_empty, Aggregation::Macro);
    CHECK(*m2.dice == doctest::Approx(2.0 / 3.0));
    CHECK(m2.undefined_dice == 1);
    CHECK_FALSE(aggregate(std::vector<ConfusionCounts>{{0, 0, 0, 4}}, Aggregation::Macro).dice.has_value());
    CHECK_THROWS_AS(aggregate(std::vector<ConfusionCounts>{}, Aggregation::Micro), ConfigError);

    // Micro Dice equals the Dice of the concatenated masks.
    Rng rng(3);
    std::vector<ConfusionCounts> parts;
    raster::Mask big_p(8, 40), big_g(8, 40);
    for (int k = 0; k < 5; ++k) {
        const auto p = random_mask(rng, 8, 8, 0.3), g = random_mask(rng, 8, 8, 0.4);
        parts.push_back(confusion(p, g));
        std::copy(p.bits().begin(), p.bits().end(), big_p.bits().begin() + 64 * k);
        std::copy(g.bits().begin(), g.bits().end(), big_g.bits().begin() + 64 * k);
    }
    const auto whole = confusion(big_p, big_g);
    CHECK(aggregate(parts, Aggregation::Micro).totals == whole);
    CHECK(*aggregate(parts, Aggregation::Micro).dice == *dice(whole));
}

TEST_CASE("evaluate a model over samples") {
    const auto v = ModelVariant::Spatial;
    model::UNet<float> m(v, model::default_config(v, 16, 4, 2), 1);
    for (const auto& p : m.parameters()) p.var->value.fill(0.0f);
    // A large head bias makes every pixel positive.
    for (const auto& p : m.parameters())
        if (p.name == "head.bias") p.var->value.fill(20.0f);

    imageio::RgbImage img(16, 16);
    raster::Mask full(16, 16);
    std::fill(full.bits().begin(), full.bits().end(), 1);
    std::vector<dataset::Sample> one{dataset::assemble_sample(0, {img, img, img}, full, full)};
    std::size_t calls = 0;
    const auto r = evaluate(m, one, Task::Boundary, {}, [&](const dataset::Sample&, std::span<const float> probs,
                                                            const raster::Mask& pred) {
        ++calls;
        CHECK(probs.size() == 256);
        CHECK(pred.count() == 256);
    });
    CHECK(calls == 1);
    CHECK(*r.dice == 1.0);
    CHECK(r.accuracy == 1.0);

    CHECK_THROWS_AS(evaluate(m, std::span<const dataset::Sample>{}, Task::Area), ConfigError);
    auto bad = one;
    bad[0].area_mask = raster::Mask();
    CHECK_THROWS_AS(evaluate(m, bad, Task::Area), DataError);

    // Batched and one-at-a-time evaluation agree.
    Rng rng(4);
    model::UNet<float> rnd(v, model::default_config(v, 16, 4, 2), 2);
    std::vector<dataset::Sample> many;
    for (int i = 0; i < 7; ++i) {
        imageio::RgbImage x(16, 16);
        for (auto& b : x.data) b = static_cast<std::uint8_t>(rng.uniform_index(256));
        many.push_back(dataset::assemble_sample(i, {x, x, x}, random_mask(rng, 16, 16), random_mask(rng, 16, 16)));
    }
    EvalOptions o1, o6;
    o1.batch_size = 1;
    CHECK(evaluate(rnd, many, Task::Area, o1).totals == evaluate(rnd, many, Task::Area, o6).totals);
}

TEST_CASE("report table and JSON") {
    MetricsReport rep;
    rep.entries.push_back({ModelVariant::SpatioTemporal, Task::Boundary, {Aggregation::Micro, 0.81234, 0.9, 3, 0, {}}});
    rep.entries.push_back({ModelVariant::Spatial, Task::Boundary, {Aggregation::Micro, 0.75, 0.8, 3, 0, {}}});
    rep.entries.push_back({ModelVariant::Spatial, Task::Area, {Aggregation::Micro, std::nullopt, 0.95, 3, 3, {}}});
    const auto table = format_table(rep);
    for (const char* row : {"Dice Score - Boundary", "Dice Score - Area", "Accuracy - Boundary", "Accuracy - Area"})
        CHECK(table.find(row) != std::string::npos);
    CHECK(table.find(display_name(ModelVariant::Spatial)) < table.find(display_name(ModelVariant::SpatioTemporal)));
    CHECK(table.find("0.8123") != std::string::npos);
    CHECK(table.find("n/a") != std::string::npos);
    CHECK(table.find(display_name(ModelVariant::SpatialPretrained)) == std::string::npos);
    CHECK(table.find("Dice Score - Boundary") < table.find("Dice Score - Area"));
    CHECK(table.find("Dice Score - Area") < table.find("Accuracy - Boundary"));

    const auto back = report_from_json(report_to_json(rep));
    REQUIRE(back.entries.size() == 3);
    CHECK(back.entries[0].metrics.dice == rep.entries[0].metrics.dice);
    CHECK_FALSE(back.entries[2].metrics.dice.has_value());
    CHECK(back.entries[1].variant == ModelVariant::Spatial);
    CHECK(report_to_json(back) == report_to_json(rep));
    CHECK(parse_aggregation("macro") == Aggregation::Macro);
}

TEST_CASE("overlay layout") {
    imageio::RgbImage in(5, 4);
    for (auto& b : in.data) b = 7;
    raster::Mask pred(5, 4), gt(5, 4);
    pred.set(1, 1);
    gt.set(2, 3);
    const auto o = make_overlay(in, pred, gt);
    CHECK(o.width == 3 * 5 + 2 * 4);
    CHECK(o.height == 4);
    CHECK(o.at(0, 0, 0) == 7);
    CHECK(o.at(5, 0, 1) == 128);
    CHECK(o.at(8, 2, 2) == 128);
    CHECK(o.at(9 + 1, 1, 0) == 255);
    CHECK(o.at(9 + 0, 1, 0) == 0);
    CHECK(o.at(18 + 2, 3, 1) == 255);
}
