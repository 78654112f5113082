#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "parceldelin/raster/mask.hpp"

namespace parceldelin::eval {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Pixel is positive iff p >= tau.
raster::Mask threshold(std::span<const float> probs, int width, int height, double tau = 0.5);

// Positive class is 1. Throws ShapeError on dimension mismatch.
ConfusionCounts confusion(const raster::Mask& pred, const raster::Mask& gt);

// 2tp / (2tp + fp + fn); nullopt when the denominator is zero (nothing
// predicted and nothing to find).
std::optional<double> dice(const ConfusionCounts& c);
// (tp + tn) / total; ConfigError when total is zero.
double accuracy(const ConfusionCounts& c);

enum class Aggregation { Micro, Macro };

struct AggregateMetrics {
    Aggregation mode = Aggregation::Micro;
    std::optional<double> dice;  // empty when every image had undefined Dice
    double accuracy = 0.0;
    std::size_t images = 0;
    std::size_t undefined_dice = 0;  // images whose Dice was undefined
    ConfusionCounts totals;
};

// Micro: sums counts over images, then computes the metrics. Macro: averages
// per-image metrics, skipping images with undefined Dice for the Dice mean.
// Throws ConfigError for an empty list.
AggregateMetrics aggregate(std::span<const ConfusionCounts> per_image, Aggregation mode);

}  // namespace parceldelin::eval
