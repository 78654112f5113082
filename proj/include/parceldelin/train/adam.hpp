#pragma once

#include <cstdint>
#include <vector>

#include "parceldelin/nn/autograd.hpp"

namespace parceldelin::train {

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    AdamOptions options;
    std::uint64_t t = 0;
    std::vector<nn::Tensor<T>> m;  // one per parameter, same shape
    std::vector<nn::Tensor<T>> v;
};

template <typename T>
AdamState<T> make_adam_state(const std::vector<nn::Parameter<T>>& params, AdamOptions options = {});

// One bias-corrected Adam update using each parameter's accumulated grad.
// Every gradient is checked first: a non-finite value throws TrainingError
// naming the parameter and leaves parameters and state untouched.
template <typename T>
void adam_step(const std::vector<nn::Parameter<T>>& params, AdamState<T>& state, double lr);

}  // namespace parceldelin::train
