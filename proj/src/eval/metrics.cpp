#include "parceldelin/eval/metrics.hpp"

#include "parceldelin/common/error.hpp"

namespace parceldelin::eval {

raster::Mask threshold(std::span<const float> probs, int width, int height, double tau) {
    if (width < 0 || height < 0 ||
        probs.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ShapeError("threshold: " + std::to_string(probs.size()) + " values for a " + std::to_string(width) +
                         "x" + std::to_string(height) + " mask");
    }
    raster::Mask m(width, height);
    auto& bits = m.bits();
    for (std::size_t i = 0; i < probs.size(); ++i) bits[i] = static_cast<double>(probs[i]) >= tau ? 1 : 0;
    return m;
}

ConfusionCounts confusion(const raster::Mask& pred, const raster::Mask& gt) {
    if (pred.width() != gt.width() || pred.height() != gt.height()) {
        throw ShapeError("confusion: prediction is " + std::to_string(pred.width()) + "x" +
                         std::to_string(pred.height()) + ", ground truth is " + std::to_string(gt.width()) + "x" +
                         std::to_string(gt.height()));
    }
    // Index 2*pred + gt: 0 tn, 1 fn, 2 fp, 3 tp.
    std::uint64_t n[4] = {0, 0, 0, 0};
    const auto& p = pred.bits();
    const auto& g = gt.bits();
    for (std::size_t i = 0; i < p.size(); ++i) ++n[2 * (p[i] != 0) + (g[i] != 0)];
    return ConfusionCounts{n[3], n[2], n[1], n[0]};
}

std::optional<double> dice(const ConfusionCounts& c) {
    const std::uint64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) throw ConfigError("accuracy of an empty mask set is undefined");
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

AggregateMetrics aggregate(std::span<const ConfusionCounts> per_image, Aggregation mode) {
    if (per_image.empty()) throw ConfigError("cannot aggregate metrics over zero images");
    AggregateMetrics out;
    out.mode = mode;
    out.images = per_image.size();
    double dice_sum = 0.0;
    double acc_sum = 0.0;
    std::size_t dice_n = 0;
    for (const auto& c : per_image) {
        out.totals += c;
        const auto d = dice(c);
        if (!d) {
            ++out.undefined_dice;
        } else {
            dice_sum += *d;
            ++dice_n;
        }
        if (mode == Aggregation::Macro) acc_sum += accuracy(c);
    }
    if (mode == Aggregation::Micro) {
        out.dice = dice(out.totals);
        out.accuracy = accuracy(out.totals);
    } else {
        if (dice_n > 0) out.dice = dice_sum / static_cast<double>(dice_n);
        out.accuracy = acc_sum / static_cast<double>(per_image.size());
    }
    return out;
}

}  // namespace parceldelin::eval
