#pragma once

#include "parceldelin/nn/autograd.hpp"

namespace parceldelin::train {

enum class LossKind { Bce, Dice };

std::string_view to_string(LossKind k);
LossKind parse_loss(std::string_view name);  // "bce" | "dice"

inline constexpr double kBceClamp = 1e-7;
inline constexpr double kDiceSmooth = 1.0;

// Mean over all elements of -[t log p + (1-t) log(1-p)], p clamped to
// [1e-7, 1 - 1e-7]. Returns a shape {1} node.
template <typename T>
nn::Var<T> bce_loss(nn::Tape<T>& tape, const nn::Var<T>& pred, const nn::Tensor<T>& target);

// 1 - (2 sum(p t) + 1) / (sum p + sum t + 1) per batch item (axis 0),
// averaged over the batch.
template <typename T>
nn::Var<T> soft_dice_loss(nn::Tape<T>& tape, const nn::Var<T>& pred, const nn::Tensor<T>& target);

template <typename T>
nn::Var<T> compute_loss(LossKind kind, nn::Tape<T>& tape, const nn::Var<T>& pred, const nn::Tensor<T>& target) {
    return kind == LossKind::Bce ? bce_loss(tape, pred, target) : soft_dice_loss(tape, pred, target);
}

}  // namespace parceldelin::train
