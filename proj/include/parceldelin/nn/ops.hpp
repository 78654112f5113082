#pragma once

#include <cstddef>

#include "parceldelin/nn/autograd.hpp"

namespace parceldelin::nn {

struct ConvParams {
    std::size_t stride = 1;
    std::size_t pad = 0;
    std::size_t dilation = 1;
};

// Output extent of a convolution along one axis; throws ShapeError when the
// (dilated) kernel does not fit.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const ConvParams& p);

// x: (N, Cin, H, W), w: (Cout, Cin, k, k), b: (Cout) or null.
// y[n,o,i,j] = b[o] + sum_{c,u,v} x[n,c,i*s-p+u*d, j*s-p+v*d] * w[o,c,u,v],
// with out-of-range x read as zero. Products are summed kernel-major.
template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b, const ConvParams& p);

// 2x2 non-overlapping max pooling; ties keep the first element in row-major
// window order. H and W must be even.
template <typename T>
Var<T> maxpool2x(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> upsample_nearest2x(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x);

// Stacks the channels of a followed by those of b; N, H, W must agree.
template <typename T>
Var<T> concat_channels(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b);

// Scalar (shape {1}) sum of all elements, accumulated in double.
template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> mean(Tape<T>& tape, const Var<T>& x);

enum class BatchNormMode { Train, Eval };

template <typename T>
struct BatchNormStats {
    Tensor<T> running_mean;
    Tensor<T> running_var;

    explicit BatchNormStats(std::size_t channels = 0)
        : running_mean(Shape{channels}, T(0)), running_var(Shape{channels}, T(1)) {}
};

struct BatchNormOptions {
    double eps = 1e-5;
    double momentum = 0.1;
};

// Per-channel normalization over (N, H, W) followed by gamma/beta. Train mode
// uses batch statistics and folds them into `stats` (unbiased variance);
// eval mode normalizes with `stats`. eps must be positive.
template <typename T>
Var<T> batchnorm2d(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                   BatchNormStats<T>& stats, BatchNormMode mode, const BatchNormOptions& opt = {});

}  // namespace parceldelin::nn
