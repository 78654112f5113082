#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "parceldelin/dataset/dataset.hpp"
#include "parceldelin/eval/metrics.hpp"
#include "parceldelin/imageio/png.hpp"
#include "parceldelin/model/unet.hpp"

namespace parceldelin::eval {

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);  // "micro" | "macro"

struct EvalOptions {
    double threshold = 0.5;
    Aggregation aggregation = Aggregation::Micro;
    std::size_t batch_size = 6;
};

// Called once per sample with its probability map (H * W, row-major) and the
// thresholded prediction.
using PredictionSink =
    std::function<void(const dataset::Sample&, std::span<const float> probs, const raster::Mask& pred)>;

// Runs the model over the samples in eval mode and aggregates the confusion
// counts. ConfigError for an empty split, DataError when a sample lacks the
// task's mask.
AggregateMetrics evaluate(model::UNet<float>& model, std::span<const dataset::Sample> samples, Task task,
                          const EvalOptions& options = {}, const PredictionSink& sink = {});

struct ReportEntry {
    ModelVariant variant = ModelVariant::Spatial;
    Task task = Task::Boundary;
    AggregateMetrics metrics;
};

struct MetricsReport {
    Aggregation aggregation = Aggregation::Micro;
    double threshold = 0.5;
    std::vector<ReportEntry> entries;
};

// Rows "Dice Score - Boundary", "Dice Score - Area", "Accuracy - Boundary",
// "Accuracy - Area"; one column per variant present, in enum order. Missing
// cells print "-", undefined Dice prints "n/a".
std::string format_table(const MetricsReport& report);
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

// Slot1 input, prediction and ground truth side by side, separated by a
// 4-px grey gutter; masks drawn white on black.
imageio::RgbImage make_overlay(const imageio::RgbImage& input, const raster::Mask& pred, const raster::Mask& gt);

}  // namespace parceldelin::eval
