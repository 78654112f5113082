#include "parceldelin/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "parceldelin/common/error.hpp"
#include "parceldelin/nn/kernels.hpp"

namespace parceldelin::nn {

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const ConvParams& p) {
    if (p.stride == 0 || p.dilation == 0 || kernel == 0) {
        throw ShapeError("conv2d: stride, dilation and kernel size must be positive");
    }
    const auto span = static_cast<long long>(p.dilation * (kernel - 1) + 1);
    const auto padded = static_cast<long long>(in + 2 * p.pad);
    if (padded < span) {
        throw ShapeError("conv2d: input extent " + std::to_string(in) + " with pad " + std::to_string(p.pad) +
                         " is smaller than the dilated kernel extent " + std::to_string(span));
    }
    return static_cast<std::size_t>((padded - span) / static_cast<long long>(p.stride)) + 1;
}

namespace {

struct ConvGeometry {
    std::size_t cin, h, w, k, hout, wout;
    ConvParams p;

    std::size_t rows() const { return cin * k * k; }
    std::size_t cols() const { return hout * wout; }
};

// Valid output columns [lo, hi) for which j*s + off lands inside [0, W).
inline void valid_range(long long off, long long s, long long W, std::size_t wout, std::size_t& lo,
                        std::size_t& hi) {
    long long l = off >= 0 ? 0 : (-off + s - 1) / s;
    long long h = W - off <= 0 ? 0 : (W - off + s - 1) / s;
    l = std::min<long long>(l, static_cast<long long>(wout));
    h = std::clamp<long long>(h, l, static_cast<long long>(wout));
    lo = static_cast<std::size_t>(l);
    hi = static_cast<std::size_t>(h);
}

// Column matrix for output rows [r0, r1) of the batch, where flattened output
// row r = n*hout + i. Entry ((c*k+u)*k+v, (r-r0)*wout + j) holds
// x[n, c, i*s-p+u*d, j*s-p+v*d], zero outside the input.
template <typename T>
void im2col_rows(const T* x, const ConvGeometry& g, std::size_t r0, std::size_t r1, T* cols) {
    const auto s = static_cast<long long>(g.p.stride);
    const auto pad = static_cast<long long>(g.p.pad);
    const auto d = static_cast<long long>(g.p.dilation);
    const auto H = static_cast<long long>(g.h);
    const auto W = static_cast<long long>(g.w);
    const std::size_t ld = (r1 - r0) * g.wout;
    std::size_t row = 0;
    for (std::size_t c = 0; c < g.cin; ++c) {
        for (std::size_t u = 0; u < g.k; ++u) {
            for (std::size_t v = 0; v < g.k; ++v, ++row) {
                const long long ho = static_cast<long long>(u) * d - pad;
                const long long wo = static_cast<long long>(v) * d - pad;
                std::size_t lo, hi;
                valid_range(wo, s, W, g.wout, lo, hi);
                T* out = cols + row * ld;
                for (std::size_t r = r0; r < r1; ++r) {
                    const std::size_t n = r / g.hout, i = r % g.hout;
                    const long long hi_row = static_cast<long long>(i) * s + ho;
                    T* dst = out + (r - r0) * g.wout;
                    if (hi_row < 0 || hi_row >= H) {
                        std::fill(dst, dst + g.wout, T(0));
                        continue;
                    }
                    const T* src = x + ((n * g.cin + c) * g.h + static_cast<std::size_t>(hi_row)) * g.w;
                    std::fill(dst, dst + lo, T(0));
                    if (s == 1) {
                        std::copy(src + (static_cast<long long>(lo) + wo), src + (static_cast<long long>(hi) + wo),
                                  dst + lo);
                    } else {
                        for (std::size_t j = lo; j < hi; ++j) dst[j] = src[static_cast<long long>(j) * s + wo];
                    }
                    std::fill(dst + hi, dst + g.wout, T(0));
                }
            }
        }
    }
}

// Adjoint of im2col_rows: scatters column gradients onto the input gradient.
template <typename T>
void col2im_rows_add(const T* cols, const ConvGeometry& g, std::size_t r0, std::size_t r1, T* dx) {
    const auto s = static_cast<long long>(g.p.stride);
    const auto pad = static_cast<long long>(g.p.pad);
    const auto d = static_cast<long long>(g.p.dilation);
    const auto H = static_cast<long long>(g.h);
    const auto W = static_cast<long long>(g.w);
    const std::size_t ld = (r1 - r0) * g.wout;
    std::size_t row = 0;
    for (std::size_t c = 0; c < g.cin; ++c) {
        for (std::size_t u = 0; u < g.k; ++u) {
            for (std::size_t v = 0; v < g.k; ++v, ++row) {
                const long long ho = static_cast<long long>(u) * d - pad;
                const long long wo = static_cast<long long>(v) * d - pad;
                std::size_t lo, hi;
                valid_range(wo, s, W, g.wout, lo, hi);
                const T* in = cols + row * ld;
                for (std::size_t r = r0; r < r1; ++r) {
                    const std::size_t n = r / g.hout, i = r % g.hout;
                    const long long hi_row = static_cast<long long>(i) * s + ho;
                    if (hi_row < 0 || hi_row >= H) continue;
                    const T* src = in + (r - r0) * g.wout;
                    T* dst = dx + ((n * g.cin + c) * g.h + static_cast<std::size_t>(hi_row)) * g.w;
                    for (std::size_t j = lo; j < hi; ++j) dst[static_cast<long long>(j) * s + wo] += src[j];
                }
            }
        }
    }
}

// Output rows per column block, sized so one block of the column matrix stays
// cache resident.
inline std::size_t rows_per_block(const ConvGeometry& g) {
    constexpr std::size_t target_elems = 1u << 17;
    const std::size_t cols = std::max<std::size_t>(512, target_elems / std::max<std::size_t>(1, g.rows()));
    return std::max<std::size_t>(1, cols / g.wout);
}

}  // namespace

template <typename T>
Var<T> conv2d(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b, const ConvParams& p) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    require_rank(xs, 4, "conv2d input");
    require_rank(ws, 4, "conv2d weight");
    if (ws[1] != xs[1]) {
        throw ShapeError("conv2d: weight expects " + std::to_string(ws[1]) + " input channels, input has " +
                         std::to_string(xs[1]) + " (input " + shape_str(xs) + ", weight " + shape_str(ws) + ")");
    }
    if (ws[2] != ws[3]) {
        throw ShapeError("conv2d: kernel must be square, got " + shape_str(ws));
    }
    const std::size_t cout = ws[0];
    if (b && b->value.shape() != Shape{cout}) {
        throw ShapeError("conv2d: bias shape " + shape_str(b->value.shape()) + " does not match " +
                         std::to_string(cout) + " output channels");
    }
    ConvGeometry g{xs[1], xs[2], xs[3], ws[2], 0, 0, p};
    g.hout = conv_output_extent(g.h, g.k, p);
    g.wout = conv_output_extent(g.w, g.k, p);
    const std::size_t n_batch = xs[0];
    const std::size_t K = g.rows();
    const std::size_t P = g.cols();
    const std::size_t total_rows = n_batch * g.hout;
    const std::size_t block = rows_per_block(g);

    // Blocks of output rows (possibly spanning batch items) are lowered to a
    // column matrix and multiplied; each output element still sums its K
    // products in kernel order, independent of the blocking.
    Tensor<T> y(Shape{n_batch, cout, g.hout, g.wout});
    const auto& gemm = kernels::active<T>();
    std::vector<T> cols(K * block * g.wout);
    std::vector<T> out(cout * block * g.wout);
    for (std::size_t r0 = 0; r0 < total_rows; r0 += block) {
        const std::size_t r1 = std::min(total_rows, r0 + block);
        const std::size_t L = (r1 - r0) * g.wout;
        im2col_rows(x->value.raw(), g, r0, r1, cols.data());
        for (std::size_t o = 0; o < cout; ++o) {
            std::fill_n(out.data() + o * L, L, b ? b->value[o] : T(0));
        }
        gemm.gemm_nn(cout, L, K, w->value.raw(), K, cols.data(), L, out.data(), L);
        for (std::size_t r = r0; r < r1; ++r) {
            const std::size_t n = r / g.hout, i = r % g.hout;
            for (std::size_t o = 0; o < cout; ++o) {
                std::copy_n(out.data() + o * L + (r - r0) * g.wout, g.wout,
                            y.raw() + (n * cout + o) * P + i * g.wout);
            }
        }
    }

    return tape.record(std::move(y), {x, w, b}, [x, w, b, g, n_batch, cout](const Tensor<T>& dy, const Tensor<T>&) {
        const std::size_t K = g.rows();
        const std::size_t P = g.cols();
        const std::size_t total_rows = n_batch * g.hout;
        const std::size_t block = rows_per_block(g);
        const auto& gemm = kernels::active<T>();
        if (b && b->requires_grad) {
            T* db = b->grad_buffer().raw();
            for (std::size_t o = 0; o < cout; ++o) {
                double acc = 0.0;
                for (std::size_t n = 0; n < n_batch; ++n) {
                    const T* src = dy.raw() + (n * cout + o) * P;
                    for (std::size_t q = 0; q < P; ++q) acc += src[q];
                }
                db[o] += static_cast<T>(acc);
            }
        }
        const bool need_w = w->requires_grad;
        const bool need_x = x->requires_grad;
        if (!need_w && !need_x) return;
        std::vector<T> dyt(cout * block * g.wout);
        std::vector<T> cols(need_w ? K * block * g.wout : 0);
        std::vector<T> dcols(need_x ? K * block * g.wout : 0);
        for (std::size_t r0 = 0; r0 < total_rows; r0 += block) {
            const std::size_t r1 = std::min(total_rows, r0 + block);
            const std::size_t L = (r1 - r0) * g.wout;
            for (std::size_t r = r0; r < r1; ++r) {
                const std::size_t n = r / g.hout, i = r % g.hout;
                for (std::size_t o = 0; o < cout; ++o) {
                    std::copy_n(dy.raw() + (n * cout + o) * P + i * g.wout, g.wout,
                                dyt.data() + o * L + (r - r0) * g.wout);
                }
            }
            if (need_w) {
                im2col_rows(x->value.raw(), g, r0, r1, cols.data());
                gemm.gemm_nt(cout, K, L, dyt.data(), L, cols.data(), L, w->grad_buffer().raw(), K);
            }
            if (need_x) {
                std::fill_n(dcols.data(), K * L, T(0));
                gemm.gemm_tn(K, L, cout, w->value.raw(), K, dyt.data(), L, dcols.data(), L);
                col2im_rows_add(dcols.data(), g, r0, r1, x->grad_buffer().raw());
            }
        }
    });
}

template <typename T>
Var<T> maxpool2x(Tape<T>& tape, const Var<T>& x) {
    const auto& xs = x->value.shape();
    require_rank(xs, 4, "maxpool2x");
    if (xs[2] % 2 != 0 || xs[3] % 2 != 0) {
        throw ShapeError("maxpool2x: spatial dims must be even, got " + shape_str(xs));
    }
    const std::size_t planes = xs[0] * xs[1];
    const std::size_t H = xs[2], W = xs[3], Ho = H / 2, Wo = W / 2;
    Tensor<T> y(Shape{xs[0], xs[1], Ho, Wo});
    // Flat input offset of each output's winning element.
    std::vector<std::uint32_t> argmax(y.numel());
    const T* xd = x->value.raw();
    for (std::size_t pl = 0; pl < planes; ++pl) {
        for (std::size_t i = 0; i < Ho; ++i) {
            for (std::size_t j = 0; j < Wo; ++j) {
                std::size_t best = pl * H * W + (2 * i) * W + 2 * j;
                const std::size_t cand[3] = {best + 1, best + W, best + W + 1};
                for (auto c : cand) {
                    if (xd[c] > xd[best]) best = c;
                }
                const std::size_t o = (pl * Ho + i) * Wo + j;
                y[o] = xd[best];
                argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return tape.record(std::move(y), {x}, [x, argmax = std::move(argmax)](const Tensor<T>& dy, const Tensor<T>&) {
        T* dx = x->grad_buffer().raw();
        for (std::size_t o = 0; o < argmax.size(); ++o) {
            dx[argmax[o]] += dy[o];
        }
    });
}

template <typename T>
Var<T> upsample_nearest2x(Tape<T>& tape, const Var<T>& x) {
    const auto& xs = x->value.shape();
    require_rank(xs, 4, "upsample_nearest2x");
    const std::size_t planes = xs[0] * xs[1];
    const std::size_t H = xs[2], W = xs[3], Ho = 2 * H, Wo = 2 * W;
    Tensor<T> y(Shape{xs[0], xs[1], Ho, Wo});
    const T* xd = x->value.raw();
    for (std::size_t pl = 0; pl < planes; ++pl) {
        for (std::size_t i = 0; i < Ho; ++i) {
            const T* src = xd + (pl * H + i / 2) * W;
            T* dst = y.raw() + (pl * Ho + i) * Wo;
            for (std::size_t j = 0; j < Wo; ++j) dst[j] = src[j / 2];
        }
    }
    return tape.record(std::move(y), {x}, [x, planes, H, W](const Tensor<T>& dy, const Tensor<T>&) {
        T* dx = x->grad_buffer().raw();
        const std::size_t Wo = 2 * W;
        for (std::size_t pl = 0; pl < planes; ++pl) {
            for (std::size_t i = 0; i < H; ++i) {
                const T* r0 = dy.raw() + (pl * 2 * H + 2 * i) * Wo;
                const T* r1 = r0 + Wo;
                T* dst = dx + (pl * H + i) * W;
                for (std::size_t j = 0; j < W; ++j) {
                    dst[j] += (r0[2 * j] + r0[2 * j + 1]) + (r1[2 * j] + r1[2 * j + 1]);
                }
            }
        }
    });
}

template <typename T>
Var<T> relu(Tape<T>& tape, const Var<T>& x) {
    Tensor<T> y(x->value.shape());
    const T* xd = x->value.raw();
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = xd[i] > T(0) ? xd[i] : T(0);
    return tape.record(std::move(y), {x}, [x](const Tensor<T>& dy, const Tensor<T>&) {
        T* dx = x->grad_buffer().raw();
        const T* xd = x->value.raw();
        for (std::size_t i = 0; i < dy.numel(); ++i) {
            if (xd[i] > T(0)) dx[i] += dy[i];
        }
    });
}

template <typename T>
Var<T> sigmoid(Tape<T>& tape, const Var<T>& x) {
    Tensor<T> y(x->value.shape());
    const T* xd = x->value.raw();
    for (std::size_t i = 0; i < y.numel(); ++i) {
        const T v = xd[i];
        if (v >= T(0)) {
            y[i] = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            y[i] = e / (T(1) + e);
        }
    }
    return tape.record(std::move(y), {x}, [x](const Tensor<T>& dy, const Tensor<T>& yv) {
        T* dx = x->grad_buffer().raw();
        for (std::size_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i] * yv[i] * (T(1) - yv[i]);
    });
}

template <typename T>
Var<T> concat_channels(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
    const auto& as = a->value.shape();
    const auto& bs = b->value.shape();
    require_rank(as, 4, "concat_channels");
    require_rank(bs, 4, "concat_channels");
    if (as[0] != bs[0] || as[2] != bs[2] || as[3] != bs[3]) {
        throw ShapeError("concat_channels: N/H/W mismatch " + shape_str(as) + " vs " + shape_str(bs));
    }
    const std::size_t N = as[0], ca = as[1], cb = bs[1], hw = as[2] * as[3];
    Tensor<T> y(Shape{N, ca + cb, as[2], as[3]});
    for (std::size_t n = 0; n < N; ++n) {
        std::copy_n(a->value.raw() + n * ca * hw, ca * hw, y.raw() + n * (ca + cb) * hw);
        std::copy_n(b->value.raw() + n * cb * hw, cb * hw, y.raw() + n * (ca + cb) * hw + ca * hw);
    }
    return tape.record(std::move(y), {a, b}, [a, b, N, ca, cb, hw](const Tensor<T>& dy, const Tensor<T>&) {
        for (std::size_t n = 0; n < N; ++n) {
            const T* src = dy.raw() + n * (ca + cb) * hw;
            if (a->requires_grad) {
                T* da = a->grad_buffer().raw() + n * ca * hw;
                for (std::size_t i = 0; i < ca * hw; ++i) da[i] += src[i];
            }
            if (b->requires_grad) {
                T* db = b->grad_buffer().raw() + n * cb * hw;
                for (std::size_t i = 0; i < cb * hw; ++i) db[i] += src[ca * hw + i];
            }
        }
    });
}

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
    require_same_shape(a->value.shape(), b->value.shape(), "add");
    Tensor<T> y = a->value;
    y.add_(b->value);
    return tape.record(std::move(y), {a, b}, [a, b](const Tensor<T>& dy, const Tensor<T>&) {
        if (a->requires_grad) a->grad_buffer().add_(dy);
        if (b->requires_grad) b->grad_buffer().add_(dy);
    });
}

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
    require_same_shape(a->value.shape(), b->value.shape(), "mul");
    Tensor<T> y(a->value.shape());
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] = a->value[i] * b->value[i];
    return tape.record(std::move(y), {a, b}, [a, b](const Tensor<T>& dy, const Tensor<T>&) {
        if (a->requires_grad) {
            T* da = a->grad_buffer().raw();
            for (std::size_t i = 0; i < dy.numel(); ++i) da[i] += dy[i] * b->value[i];
        }
        if (b->requires_grad) {
            T* db = b->grad_buffer().raw();
            for (std::size_t i = 0; i < dy.numel(); ++i) db[i] += dy[i] * a->value[i];
        }
    });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
    double acc = 0.0;
    for (const T v : x->value.data()) acc += v;
    return tape.record(Tensor<T>(Shape{1}, static_cast<T>(acc)), {x}, [x](const Tensor<T>& dy, const Tensor<T>&) {
        T* dx = x->grad_buffer().raw();
        for (std::size_t i = 0; i < x->value.numel(); ++i) dx[i] += dy[0];
    });
}

template <typename T>
Var<T> mean(Tape<T>& tape, const Var<T>& x) {
    const std::size_t n = x->value.numel();
    if (n == 0) throw ShapeError("mean of an empty tensor");
    double acc = 0.0;
    for (const T v : x->value.data()) acc += v;
    return tape.record(Tensor<T>(Shape{1}, static_cast<T>(acc / static_cast<double>(n))), {x},
                       [x, n](const Tensor<T>& dy, const Tensor<T>&) {
                           T* dx = x->grad_buffer().raw();
                           const T g = dy[0] / static_cast<T>(n);
                           for (std::size_t i = 0; i < n; ++i) dx[i] += g;
                       });
}

template <typename T>
Var<T> batchnorm2d(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                   BatchNormStats<T>& stats, BatchNormMode mode, const BatchNormOptions& opt) {
    if (!(opt.eps > 0.0)) {
        throw ConfigError("batchnorm2d: eps must be positive, got " + std::to_string(opt.eps));
    }
    const auto& xs = x->value.shape();
    require_rank(xs, 4, "batchnorm2d");
    const std::size_t N = xs[0], C = xs[1], hw = xs[2] * xs[3];
    require_same_shape(gamma->value.shape(), Shape{C}, "batchnorm2d gamma");
    require_same_shape(beta->value.shape(), Shape{C}, "batchnorm2d beta");
    require_same_shape(stats.running_mean.shape(), Shape{C}, "batchnorm2d running_mean");
    const std::size_t M = N * hw;

    std::vector<double> mu(C), inv_std(C);
    if (mode == BatchNormMode::Train) {
        for (std::size_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                const T* p = x->value.raw() + (n * C + c) * hw;
                for (std::size_t i = 0; i < hw; ++i) s += p[i];
            }
            const double m = s / static_cast<double>(M);
            double ss = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                const T* p = x->value.raw() + (n * C + c) * hw;
                for (std::size_t i = 0; i < hw; ++i) {
                    const double d = p[i] - m;
                    ss += d * d;
                }
            }
            const double var = ss / static_cast<double>(M);
            mu[c] = m;
            inv_std[c] = 1.0 / std::sqrt(var + opt.eps);
            const double unbiased = M > 1 ? ss / static_cast<double>(M - 1) : var;
            stats.running_mean[c] =
                static_cast<T>((1.0 - opt.momentum) * stats.running_mean[c] + opt.momentum * m);
            stats.running_var[c] =
                static_cast<T>((1.0 - opt.momentum) * stats.running_var[c] + opt.momentum * unbiased);
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mu[c] = stats.running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(static_cast<double>(stats.running_var[c]) + opt.eps);
        }
    }

    Tensor<T> y(xs);
    Tensor<T> xhat(xs);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t off = (n * C + c) * hw;
            const double g = gamma->value[c], bt = beta->value[c];
            for (std::size_t i = 0; i < hw; ++i) {
                const double h = (x->value[off + i] - mu[c]) * inv_std[c];
                xhat[off + i] = static_cast<T>(h);
                y[off + i] = static_cast<T>(g * h + bt);
            }
        }
    }
    const bool train = mode == BatchNormMode::Train;
    return tape.record(std::move(y), {x, gamma, beta},
                       [x, gamma, beta, xhat = std::move(xhat), inv_std, N, C, hw, M, train](const Tensor<T>& dy, const Tensor<T>&) {
                           for (std::size_t c = 0; c < C; ++c) {
                               double sum_dy = 0.0, sum_dy_xhat = 0.0;
                               for (std::size_t n = 0; n < N; ++n) {
                                   const std::size_t off = (n * C + c) * hw;
                                   for (std::size_t i = 0; i < hw; ++i) {
                                       sum_dy += dy[off + i];
                                       sum_dy_xhat += static_cast<double>(dy[off + i]) * xhat[off + i];
                                   }
                               }
                               if (gamma->requires_grad) gamma->grad_buffer()[c] += static_cast<T>(sum_dy_xhat);
                               if (beta->requires_grad) beta->grad_buffer()[c] += static_cast<T>(sum_dy);
                               if (!x->requires_grad) continue;
                               const double g = gamma->value[c];
                               T* dx = x->grad_buffer().raw();
                               const double Md = static_cast<double>(M);
                               for (std::size_t n = 0; n < N; ++n) {
                                   const std::size_t off = (n * C + c) * hw;
                                   for (std::size_t i = 0; i < hw; ++i) {
                                       const double gx = g * dy[off + i];
                                       double v;
                                       if (train) {
                                           v = inv_std[c] / Md *
                                               (Md * gx - g * sum_dy - xhat[off + i] * g * sum_dy_xhat);
                                       } else {
                                           v = gx * inv_std[c];
                                       }
                                       dx[off + i] += static_cast<T>(v);
                                   }
                               }
                           }
                       });
}

#define PARCELDELIN_INSTANTIATE_OPS(T)                                                                     \
    template Var<T> conv2d<T>(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&, const ConvParams&);   \
    template Var<T> maxpool2x<T>(Tape<T>&, const Var<T>&);                                                \
    template Var<T> upsample_nearest2x<T>(Tape<T>&, const Var<T>&);                                       \
    template Var<T> relu<T>(Tape<T>&, const Var<T>&);                                                     \
    template Var<T> sigmoid<T>(Tape<T>&, const Var<T>&);                                                  \
    template Var<T> concat_channels<T>(Tape<T>&, const Var<T>&, const Var<T>&);                           \
    template Var<T> add<T>(Tape<T>&, const Var<T>&, const Var<T>&);                                       \
    template Var<T> mul<T>(Tape<T>&, const Var<T>&, const Var<T>&);                                       \
    template Var<T> sum<T>(Tape<T>&, const Var<T>&);                                                      \
    template Var<T> mean<T>(Tape<T>&, const Var<T>&);                                                     \
    template Var<T> batchnorm2d<T>(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&,                \
                                   BatchNormStats<T>&, BatchNormMode, const BatchNormOptions&);

PARCELDELIN_INSTANTIATE_OPS(float)
PARCELDELIN_INSTANTIATE_OPS(double)

}  // namespace parceldelin::nn
