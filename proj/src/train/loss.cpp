#include "parceldelin/train/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "parceldelin/common/error.hpp"

namespace parceldelin::train {

using nn::Shape;
using nn::Tensor;
using nn::Var;

std::string_view to_string(LossKind k) { return k == LossKind::Bce ? "bce" : "dice"; }

LossKind parse_loss(std::string_view name) {
    if (name == "bce") return LossKind::Bce;
    if (name == "dice") return LossKind::Dice;
    throw ConfigError("unknown loss '" + std::string(name) + "' (expected bce or dice)");
}

namespace {

template <typename T>
void check_shapes(const char* what, const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape() != target.shape()) {
        throw ShapeError(std::string(what) + ": prediction " + nn::shape_str(pred.shape()) + " vs target " +
                         nn::shape_str(target.shape()));
    }
    if (pred.numel() == 0) throw ShapeError(std::string(what) + ": empty input");
}

}  // namespace

template <typename T>
Var<T> bce_loss(nn::Tape<T>& tape, const Var<T>& pred, const Tensor<T>& target) {
    check_shapes("bce_loss", pred->value, target);
    const auto& p = pred->value;
    const std::size_t n = p.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = std::clamp(static_cast<double>(p[i]), kBceClamp, 1.0 - kBceClamp);
        const double t = static_cast<double>(target[i]);
        acc -= t * std::log(q) + (1.0 - t) * std::log(1.0 - q);
    }
    Tensor<T> out(Shape{1}, static_cast<T>(acc / static_cast<double>(n)));
    return tape.record(std::move(out), {pred}, [pred, target, n](const Tensor<T>& g, const Tensor<T>&) {
        auto& gp = pred->grad_buffer();
        const auto& p = pred->value;
        const double scale = static_cast<double>(g[0]) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double q = static_cast<double>(p[i]);
            // Outside the clamp window the loss is flat in p.
            if (q < kBceClamp || q > 1.0 - kBceClamp) continue;
            const double t = static_cast<double>(target[i]);
            gp[i] += static_cast<T>(scale * (q - t) / (q * (1.0 - q)));
        }
    });
}

template <typename T>
Var<T> soft_dice_loss(nn::Tape<T>& tape, const Var<T>& pred, const Tensor<T>& target) {
    check_shapes("soft_dice_loss", pred->value, target);
    const auto& p = pred->value;
    const std::size_t batch = p.dim(0);
    const std::size_t per = p.numel() / batch;
    // Per item: numerator 2 sum(pt) + eps and denominator sum p + sum t + eps.
    std::vector<double> num(batch), den(batch);
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        double spt = 0.0, sp = 0.0, st = 0.0;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
            const double pi = static_cast<double>(p[i]);
            const double ti = static_cast<double>(target[i]);
            spt += pi * ti;
            sp += pi;
            st += ti;
        }
        num[b] = 2.0 * spt + kDiceSmooth;
        den[b] = sp + st + kDiceSmooth;
        loss += 1.0 - num[b] / den[b];
    }
    Tensor<T> out(Shape{1}, static_cast<T>(loss / static_cast<double>(batch)));
    return tape.record(std::move(out), {pred},
                       [pred, target, batch, per, num, den](const Tensor<T>& g, const Tensor<T>&) {
                           auto& gp = pred->grad_buffer();
                           const double scale = static_cast<double>(g[0]) / static_cast<double>(batch);
                           for (std::size_t b = 0; b < batch; ++b) {
                               const double d2 = den[b] * den[b];
                               for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
                                   const double ti = static_cast<double>(target[i]);
                                   gp[i] -= static_cast<T>(scale * (2.0 * ti * den[b] - num[b]) / d2);
                               }
                           }
                       });
}

template Var<float> bce_loss(nn::Tape<float>&, const Var<float>&, const Tensor<float>&);
template Var<double> bce_loss(nn::Tape<double>&, const Var<double>&, const Tensor<double>&);
template Var<float> soft_dice_loss(nn::Tape<float>&, const Var<float>&, const Tensor<float>&);
template Var<double> soft_dice_loss(nn::Tape<double>&, const Var<double>&, const Tensor<double>&);

}  // namespace parceldelin::train
