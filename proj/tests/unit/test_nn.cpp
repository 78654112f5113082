#include <doctest.h>

#include <cmath>
#include <vector>

#include "parceldelin/common/error.hpp"
#include "parceldelin/nn/grad_check.hpp"
#include "parceldelin/nn/kernels.hpp"
#include "parceldelin/nn/ops.hpp"
#include "test_util.hpp"

using namespace parceldelin;
using namespace parceldelin::nn;
using testutil::random_tensor;

namespace {

// Direct seven-loop convolution.
template <typename T>
Tensor<T> naive_conv(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, const ConvParams& p) {
    const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::size_t co = w.dim(0), k = w.dim(2);
    const std::size_t oh = (h + 2 * p.pad - p.dilation * (k - 1) - 1) / p.stride + 1;
    const std::size_t ow = (wd + 2 * p.pad - p.dilation * (k - 1) - 1) / p.stride + 1;
    Tensor<T> y(Shape{n, co, oh, ow});
    for (std::size_t b0 = 0; b0 < n; ++b0)
        for (std::size_t o = 0; o < co; ++o)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    double acc = b ? static_cast<double>((*b)[o]) : 0.0;
                    for (std::size_t c = 0; c < ci; ++c)
                        for (std::size_t u = 0; u < k; ++u)
                            for (std::size_t v = 0; v < k; ++v) {
                                const long long r = static_cast<long long>(i * p.stride + u * p.dilation) -
                                                    static_cast<long long>(p.pad);
                                const long long s = static_cast<long long>(j * p.stride + v * p.dilation) -
                                                    static_cast<long long>(p.pad);
                                if (r < 0 || s < 0 || r >= static_cast<long long>(h) ||
                                    s >= static_cast<long long>(wd))
                                    continue;
                                acc += static_cast<double>(x.at(b0, c, static_cast<std::size_t>(r),
                                                                static_cast<std::size_t>(s))) *
                                       static_cast<double>(w.at(o, c, u, v));
                            }
                    y.at(b0, o, i, j) = static_cast<T>(acc);
                }
    return y;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    REQUIRE(a.shape() == b.shape());
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i] - b[i])));
    return m;
}

// Weighted sum with fixed random weights: a scalar probe whose gradient
// reaches every output element with a distinct coefficient.
Var<double> probe(Tape<double>& tape, const Var<double>& y, const Tensor<double>& weights) {
    return sum(tape, mul(tape, y, constant(weights)));
}

}  // namespace

TEST_CASE("tensor basics") {
    Tensor<float> t(Shape{2, 3}, 1.5f);
    CHECK(t.numel() == 6);
    CHECK(t[5] == 1.5f);
    CHECK_THROWS_AS(Tensor<float>(Shape{2, 2}, std::vector<float>(3)), ShapeError);
    const auto r = t.reshaped({3, 2});
    CHECK(r.shape() == Shape{3, 2});
    CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
    CHECK(shape_str(Shape{1, 2, 3}) == "(1,2,3)");
}

TEST_CASE("conv2d matches the direct loop for every stride, padding and dilation") {
    Rng rng(11);
    for (std::size_t stride : {1u, 2u}) {
        for (std::size_t pad : {0u, 1u, 2u}) {
            for (std::size_t dil : {1u, 2u, 4u}) {
                const ConvParams p{stride, pad, dil};
                const std::size_t k = 3;
                const std::size_t h = 13, w = 11;
                if (h + 2 * pad < dil * (k - 1) + 1 || w + 2 * pad < dil * (k - 1) + 1) continue;
                auto x = random_tensor<double>({2, 3, h, w}, rng);
                auto wt = random_tensor<double>({4, 3, k, k}, rng);
                auto b = random_tensor<double>({4}, rng);
                Tape<double> tape(false);
                auto y = conv2d(tape, constant(x), constant(wt), constant(b), p);
                const auto ref = naive_conv(x, wt, &b, p);
                INFO("stride " << stride << " pad " << pad << " dilation " << dil);
                CHECK(max_abs_diff(y->value, ref) < 1e-12);

                Tape<float> tf(false);
                auto yf = conv2d(tf, constant(x.cast<float>()), constant(wt.cast<float>()), constant(b.cast<float>()), p);
                CHECK(max_abs_diff(yf->value.cast<double>(), ref) < 1e-5);
            }
        }
    }
}

TEST_CASE("conv2d rejects inconsistent shapes") {
    Tape<float> tape;
    auto x = constant(Tensor<float>(Shape{1, 3, 8, 8}));
    CHECK_THROWS_AS(conv2d(tape, x, constant(Tensor<float>(Shape{2, 4, 3, 3})), Var<float>{}, ConvParams{}),
                    ShapeError);
    CHECK_THROWS_AS(conv2d(tape, x, constant(Tensor<float>(Shape{2, 3, 3, 3})), Var<float>{}, ConvParams{1, 0, 4}),
                    ShapeError);
}

TEST_CASE("SIMD GEMM kernels agree with the scalar reference") {
    using kernels::Isa;
    Rng rng(5);
    std::vector<Isa> simd;
    for (Isa isa : {Isa::Avx2, Isa::Neon}) {
        if (kernels::isa_available(isa)) simd.push_back(isa);
    }
    if (simd.empty()) {
        MESSAGE("no SIMD kernels on this CPU; only the scalar reference is exercised");
    }
    const auto& ref = kernels::gemm_table<float>(Isa::Scalar);
    const std::size_t sizes[][3] = {{1, 1, 1}, {3, 5, 7}, {17, 33, 9}, {8, 64, 27}, {31, 129, 72}, {4, 1000, 5}};
    for (Isa isa : simd) {
        const auto& t = kernels::gemm_table<float>(isa);
        for (const auto& s : sizes) {
            const std::size_t M = s[0], N = s[1], K = s[2];
            INFO(kernels::isa_name(isa) << " M=" << M << " N=" << N << " K=" << K);
            const auto a_nn = random_tensor<float>({M, K}, rng);
            const auto b_nn = random_tensor<float>({K, N}, rng);
            const auto b_nt = random_tensor<float>({N, K}, rng);
            const auto a_tn = random_tensor<float>({K, M}, rng);
            const auto c0 = random_tensor<float>({M, N}, rng);
            // Tolerance covers FMA contraction and split partial sums.
            const double tol = 1e-5 * static_cast<double>(K);
            {
                auto c1 = c0, c2 = c0;
                ref.gemm_nn(M, N, K, a_nn.raw(), K, b_nn.raw(), N, c1.raw(), N);
                t.gemm_nn(M, N, K, a_nn.raw(), K, b_nn.raw(), N, c2.raw(), N);
                CHECK(max_abs_diff(c1, c2) < tol);
            }
            {
                auto c1 = c0, c2 = c0;
                ref.gemm_nt(M, N, K, a_nn.raw(), K, b_nt.raw(), K, c1.raw(), N);
                t.gemm_nt(M, N, K, a_nn.raw(), K, b_nt.raw(), K, c2.raw(), N);
                CHECK(max_abs_diff(c1, c2) < tol);
            }
            {
                auto c1 = c0, c2 = c0;
                ref.gemm_tn(M, N, K, a_tn.raw(), M, b_nn.raw(), N, c1.raw(), N);
                t.gemm_tn(M, N, K, a_tn.raw(), M, b_nn.raw(), N, c2.raw(), N);
                CHECK(max_abs_diff(c1, c2) < tol);
            }
        }
    }
}

TEST_CASE("scalar gemm equals a triple loop in double") {
    Rng rng(9);
    const std::size_t M = 7, N = 13, K = 6;
    const auto a = random_tensor<double>({M, K}, rng);
    const auto b = random_tensor<double>({K, N}, rng);
    Tensor<double> c(Shape{M, N}, 0.5);
    kernels::gemm_table<double>(kernels::Isa::Scalar).gemm_nn(M, N, K, a.raw(), K, b.raw(), N, c.raw(), N);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) acc += a[i * K + k] * b[k * N + j];
            CHECK(c[i * N + j] == doctest::Approx(0.5 + acc).epsilon(1e-14));
        }
}

TEST_CASE("conv2d output is identical under scalar and SIMD dispatch up to rounding") {
    using kernels::Isa;
    const Isa original = kernels::active_isa();
    Rng rng(21);
    const auto x = random_tensor<float>({2, 8, 20, 20}, rng);
    const auto w = random_tensor<float>({8, 8, 3, 3}, rng);
    kernels::set_active_isa(Isa::Scalar);
    Tape<float> t1(false);
    const auto y1 = conv2d(t1, constant(x), constant(w), Var<float>{}, ConvParams{1, 2, 2})->value;
    kernels::set_active_isa(original);
    Tape<float> t2(false);
    const auto y2 = conv2d(t2, constant(x), constant(w), Var<float>{}, ConvParams{1, 2, 2})->value;
    CHECK(max_abs_diff(y1, y2) < 1e-4);
}

TEST_CASE("gradient checks of the layer primitives") {
    Rng rng(3);
    SUBCASE("conv2d, every dilation") {
        for (std::size_t dil : {1u, 2u, 4u}) {
            for (std::size_t stride : {1u, 2u}) {
                auto x = parameter(random_tensor<double>({2, 2, 9, 9}, rng));
                auto w = parameter(random_tensor<double>({3, 2, 3, 3}, rng));
                auto b = parameter(random_tensor<double>({3}, rng));
                const ConvParams p{stride, dil, dil};
                const auto out_hw = conv_output_extent(9, 3, p);
                const auto pw = random_tensor<double>({2, 3, out_hw, out_hw}, rng);
                const auto r = grad_check(
                    [&](Tape<double>& t) { return probe(t, conv2d(t, x, w, b, p), pw); },
                    {{"x", x}, {"w", w}, {"b", b}}, 1e-5);
                INFO("dilation " << dil << " stride " << stride << " worst " << r.worst_param);
                CHECK(r.max_rel_error < 1e-6);
            }
        }
    }
    SUBCASE("maxpool2x, upsample, relu, sigmoid") {
        auto x = parameter(random_tensor<double>({2, 3, 6, 6}, rng));
        const auto w3 = random_tensor<double>({2, 3, 3, 3}, rng);
        const auto w12 = random_tensor<double>({2, 3, 12, 12}, rng);
        const auto w6 = random_tensor<double>({2, 3, 6, 6}, rng);
        // Keep inputs clear of the ReLU kink.
        for (auto& v : x->value.data()) {
            if (std::abs(v) < 0.05) v += 0.1;
        }
        CHECK(grad_check([&](Tape<double>& t) { return probe(t, maxpool2x(t, x), w3); }, {{"x", x}}, 1e-6)
                  .max_rel_error < 1e-6);
        CHECK(grad_check([&](Tape<double>& t) { return probe(t, upsample_nearest2x(t, x), w12); }, {{"x", x}}, 1e-5)
                  .max_rel_error < 1e-6);
        CHECK(grad_check([&](Tape<double>& t) { return probe(t, relu(t, x), w6); }, {{"x", x}}, 1e-5)
                  .max_rel_error < 1e-6);
        CHECK(grad_check([&](Tape<double>& t) { return probe(t, sigmoid(t, x), w6); }, {{"x", x}}, 1e-5)
                  .max_rel_error < 1e-6);
    }
    SUBCASE("concat, add, mul, mean") {
        auto a = parameter(random_tensor<double>({2, 2, 4, 4}, rng));
        auto b = parameter(random_tensor<double>({2, 3, 4, 4}, rng));
        auto c = parameter(random_tensor<double>({2, 2, 4, 4}, rng));
        const auto w5 = random_tensor<double>({2, 5, 4, 4}, rng);
        const auto w2 = random_tensor<double>({2, 2, 4, 4}, rng);
        CHECK(grad_check([&](Tape<double>& t) { return probe(t, concat_channels(t, a, b), w5); },
                         {{"a", a}, {"b", b}}, 1e-5)
                  .max_rel_error < 1e-6);
        CHECK(grad_check([&](Tape<double>& t) { return probe(t, add(t, a, c), w2); }, {{"a", a}, {"c", c}}, 1e-5)
                  .max_rel_error < 1e-6);
        CHECK(grad_check([&](Tape<double>& t) { return probe(t, mul(t, a, c), w2); }, {{"a", a}, {"c", c}}, 1e-5)
                  .max_rel_error < 1e-6);
        CHECK(grad_check([&](Tape<double>& t) { return mean(t, mul(t, a, a)); }, {{"a", a}}, 1e-5).max_rel_error <
              1e-6);
    }
    SUBCASE("batchnorm2d in train mode") {
        auto x = parameter(random_tensor<double>({3, 2, 4, 4}, rng));
        auto g = parameter(random_tensor<double>({2}, rng, 0.5, 1.5));
        auto be = parameter(random_tensor<double>({2}, rng));
        const auto pw = random_tensor<double>({3, 2, 4, 4}, rng);
        BatchNormStats<double> stats(2);
        const auto r = grad_check(
            [&](Tape<double>& t) { return probe(t, batchnorm2d(t, x, g, be, stats, BatchNormMode::Train), pw); },
            {{"x", x}, {"gamma", g}, {"beta", be}}, 1e-5);
        CHECK(r.max_rel_error < 1e-5);
    }
}

TEST_CASE("kink guard drops elements straddling a relu switch and keeps smooth ones") {
    Tensor<double> v(Shape{1, 1, 1, 3});
    v[0] = 3e-7;   // relu switches inside [x - 1e-6, x + 1e-6]
    v[1] = 0.5;
    v[2] = -0.5;
    auto x = parameter(v);
    auto loss = [&](Tape<double>& t) { return sum(t, relu(t, x)); };
    const auto plain = grad_check(loss, {{"x", x}}, 1e-6);
    CHECK(plain.max_rel_error > 0.1);
    CHECK(plain.worst_index == 0);
    const auto guarded = grad_check(loss, {{"x", x}}, 1e-6, {}, true);
    CHECK(guarded.kinks == 1);
    CHECK(guarded.checked == 2);
    CHECK(guarded.max_rel_error < 1e-9);
}

TEST_CASE("maxpool keeps the first maximum of a tied window") {
    Tensor<double> x(Shape{1, 1, 2, 2}, 1.0);
    auto v = parameter(x);
    Tape<double> tape;
    auto y = maxpool2x(tape, v);
    CHECK(y->value[0] == 1.0);
    tape.backward(sum(tape, y));
    CHECK(v->grad[0] == 1.0);
    CHECK(v->grad[1] == 0.0);
    CHECK(v->grad[2] == 0.0);
    CHECK(v->grad[3] == 0.0);
}

TEST_CASE("batchnorm running statistics and eval mode") {
    Rng rng(4);
    auto x = constant(random_tensor<double>({4, 2, 3, 3}, rng, 0.0, 2.0));
    auto g = parameter(Tensor<double>(Shape{2}, 1.0));
    auto b = parameter(Tensor<double>(Shape{2}, 0.0));
    BatchNormStats<double> stats(2);
    Tape<double> tape(false);
    auto y = batchnorm2d(tape, x, g, b, stats, BatchNormMode::Train);
    // Per channel: normalized output has zero mean.
    for (std::size_t c = 0; c < 2; ++c) {
        double m = 0.0, mean_x = 0.0, var_x = 0.0;
        for (std::size_t n = 0; n < 4; ++n)
            for (std::size_t i = 0; i < 9; ++i) {
                m += y->value.at(n, c, i / 3, i % 3);
                mean_x += x->value.at(n, c, i / 3, i % 3);
            }
        mean_x /= 36.0;
        for (std::size_t n = 0; n < 4; ++n)
            for (std::size_t i = 0; i < 9; ++i) {
                const double d = x->value.at(n, c, i / 3, i % 3) - mean_x;
                var_x += d * d;
            }
        CHECK(std::abs(m / 36.0) < 1e-12);
        CHECK(stats.running_mean[c] == doctest::Approx(0.1 * mean_x));
        CHECK(stats.running_var[c] == doctest::Approx(0.9 + 0.1 * var_x / 35.0));
    }
    auto ye = batchnorm2d(tape, x, g, b, stats, BatchNormMode::Eval);
    CHECK(ye->value.at(0, 0, 0, 0) ==
          doctest::Approx((x->value.at(0, 0, 0, 0) - stats.running_mean[0]) / std::sqrt(stats.running_var[0] + 1e-5)));
    CHECK_THROWS_AS(batchnorm2d(tape, x, g, b, stats, BatchNormMode::Train, BatchNormOptions{0.0, 0.1}), ConfigError);
}

TEST_CASE("tape records nothing when recording is off") {
    auto x = parameter(Tensor<float>(Shape{1, 1, 2, 2}, 1.0f));
    Tape<float> off(false);
    relu(off, x);
    CHECK(off.size() == 0);
    Tape<float> on;
    relu(on, x);
    CHECK(on.size() == 1);
    // Nothing to record when no input needs a gradient.
    Tape<float> on2;
    relu(on2, constant(Tensor<float>(Shape{1, 1, 2, 2})));
    CHECK(on2.size() == 0);
}

TEST_CASE("backward rejects a non-scalar loss") {
    auto x = parameter(Tensor<float>(Shape{2}, 1.0f));
    Tape<float> tape;
    auto y = relu(tape, x);
    CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("gradients accumulate across backward passes until zeroed") {
    auto x = parameter(Tensor<double>(Shape{3}, 2.0));
    std::vector<Parameter<double>> ps{{"x", x}};
    for (int i = 0; i < 2; ++i) {
        Tape<double> tape;
        tape.backward(sum(tape, mul(tape, x, x)));
    }
    CHECK(x->grad[0] == doctest::Approx(8.0));
    zero_grad(ps);
    CHECK(x->grad[0] == 0.0);
}
