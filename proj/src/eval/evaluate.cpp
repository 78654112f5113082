#include "parceldelin/eval/evaluate.hpp"

#include <cstdio>

#include <json.hpp>

#include "parceldelin/common/error.hpp"

namespace parceldelin::eval {

using nlohmann::json;

std::string_view to_string(Aggregation a) { return a == Aggregation::Micro ? "micro" : "macro"; }

Aggregation parse_aggregation(std::string_view name) {
    if (name == "micro") return Aggregation::Micro;
    if (name == "macro") return Aggregation::Macro;
    throw ConfigError("unknown aggregation '" + std::string(name) + "' (expected micro or macro)");
}

AggregateMetrics evaluate(model::UNet<float>& model, std::span<const dataset::Sample> samples, Task task,
                          const EvalOptions& options, const PredictionSink& sink) {
    if (samples.empty()) throw ConfigError("cannot evaluate an empty split");
    if (options.batch_size == 0) throw ConfigError("evaluation batch size must be >= 1");
    for (const auto& s : samples) {
        const auto& m = s.mask(task);
        if (m.size() == 0 || m.width() != s.width() || m.height() != s.height()) {
            throw DataError("tile " + std::to_string(s.tile_id) + " has no usable " + std::string(to_string(task)) +
                            " mask");
        }
    }
    std::vector<ConfusionCounts> counts;
    counts.reserve(samples.size());
    for (std::size_t start = 0; start < samples.size(); start += options.batch_size) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(samples.size(), start + options.batch_size); ++i) idx.push_back(i);
        const auto batch = dataset::make_batch(samples, idx, model.variant(), task);
        const auto probs = model.predict(batch.inputs);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto& s = samples[idx[k]];
            const std::size_t px = static_cast<std::size_t>(s.width()) * static_cast<std::size_t>(s.height());
            std::span<const float> p(probs.raw() + k * px, px);
            const auto pred = threshold(p, s.width(), s.height(), options.threshold);
            counts.push_back(confusion(pred, s.mask(task)));
            if (sink) sink(s, p, pred);
        }
    }
    return aggregate(counts, options.aggregation);
}

namespace {

constexpr ModelVariant kVariants[] = {ModelVariant::Spatial, ModelVariant::SpatialPretrained,
                                      ModelVariant::SpatioTemporal, ModelVariant::SpatioTemporalPretrained};

const ReportEntry* find(const MetricsReport& r, ModelVariant v, Task t) {
    const ReportEntry* hit = nullptr;
    for (const auto& e : r.entries) {
        if (e.variant == v && e.task == t) hit = &e;
    }
    return hit;
}

std::string cell(const ReportEntry* e, bool dice_row) {
    if (!e) return "-";
    char buf[32];
    if (dice_row) {
        if (!e->metrics.dice) return "n/a";
        std::snprintf(buf, sizeof buf, "%.4f", *e->metrics.dice);
    } else {
        std::snprintf(buf, sizeof buf, "%.4f", e->metrics.accuracy);
    }
    return buf;
}

}  // namespace

std::string format_table(const MetricsReport& report) {
    std::vector<ModelVariant> columns;
    for (auto v : kVariants) {
        if (find(report, v, Task::Boundary) || find(report, v, Task::Area)) columns.push_back(v);
    }
    struct Row {
        const char* label;
        Task task;
        bool dice;
    };
    const Row rows[] = {{"Dice Score - Boundary", Task::Boundary, true},
                        {"Dice Score - Area", Task::Area, true},
                        {"Accuracy - Boundary", Task::Boundary, false},
                        {"Accuracy - Area", Task::Area, false}};

    std::vector<std::vector<std::string>> grid;
    grid.push_back({"Metric"});
    for (auto v : columns) grid.back().emplace_back(display_name(v));
    for (const auto& r : rows) {
        grid.push_back({r.label});
        for (auto v : columns) grid.back().push_back(cell(find(report, v, r.task), r.dice));
    }
    std::vector<std::size_t> width(grid.front().size(), 0);
    for (const auto& line : grid) {
        for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
    }
    std::string out;
    for (std::size_t li = 0; li < grid.size(); ++li) {
        const auto& line = grid[li];
        for (std::size_t c = 0; c < line.size(); ++c) {
            out += c == 0 ? "" : " | ";
            out += line[c];
            if (c + 1 < line.size()) out.append(width[c] - line[c].size(), ' ');
        }
        out += '\n';
        if (li == 0) {
            for (std::size_t c = 0; c < width.size(); ++c) {
                out += c == 0 ? "" : "-|-";
                out.append(width[c], '-');
            }
            out += '\n';
        }
    }
    out += "(" + std::string(to_string(report.aggregation)) + " aggregation, threshold ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", report.threshold);
    out += buf;
    out += ")\n";
    return out;
}

std::string report_to_json(const MetricsReport& report) {
    json results = json::array();
    for (const auto& e : report.entries) {
        const auto& m = e.metrics;
        results.push_back(json{{"variant", std::string(to_string(e.variant))},
                               {"task", std::string(to_string(e.task))},
                               {"dice", m.dice ? json(*m.dice) : json(nullptr)},
                               {"accuracy", m.accuracy},
                               {"images", m.images},
                               {"undefined_dice", m.undefined_dice},
                               {"tp", m.totals.tp},
                               {"fp", m.totals.fp},
                               {"fn", m.totals.fn},
                               {"tn", m.totals.tn}});
    }
    json j{{"aggregation", std::string(to_string(report.aggregation))},
           {"threshold", report.threshold},
           {"results", results}};
    return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
    MetricsReport r;
    try {
        const auto j = json::parse(text);
        r.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
        r.threshold = j.at("threshold").get<double>();
        for (const auto& e : j.at("results")) {
            ReportEntry re;
            re.variant = parse_variant(e.at("variant").get<std::string>());
            re.task = parse_task(e.at("task").get<std::string>());
            re.metrics.mode = r.aggregation;
            if (!e.at("dice").is_null()) re.metrics.dice = e.at("dice").get<double>();
            re.metrics.accuracy = e.at("accuracy").get<double>();
            re.metrics.images = e.at("images").get<std::size_t>();
            re.metrics.undefined_dice = e.at("undefined_dice").get<std::size_t>();
            re.metrics.totals = {e.at("tp").get<std::uint64_t>(), e.at("fp").get<std::uint64_t>(),
                                 e.at("fn").get<std::uint64_t>(), e.at("tn").get<std::uint64_t>()};
            r.entries.push_back(re);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("metrics report: ") + e.what());
    }
    return r;
}

imageio::RgbImage make_overlay(const imageio::RgbImage& input, const raster::Mask& pred, const raster::Mask& gt) {
    const int w = input.width;
    const int h = input.height;
    if (pred.width() != w || pred.height() != h || gt.width() != w || gt.height() != h) {
        throw ShapeError("overlay panels must share one size");
    }
    constexpr int kGutter = 4;
    imageio::RgbImage out(3 * w + 2 * kGutter, h);
    std::fill(out.data.begin(), out.data.end(), std::uint8_t{128});
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                out.at(c, r, ch) = input.at(c, r, ch);
                out.at(w + kGutter + c, r, ch) = pred.get(c, r) ? 255 : 0;
                out.at(2 * (w + kGutter) + c, r, ch) = gt.get(c, r) ? 255 : 0;
            }
        }
    }
    return out;
}

}  // namespace parceldelin::eval
