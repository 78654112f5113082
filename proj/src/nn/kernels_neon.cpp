// AArch64 Advanced SIMD variant; NEON is architecturally guaranteed there.
#include <arm_neon.h>

#include <algorithm>

#include "parceldelin/nn/kernels.hpp"

namespace parceldelin::nn::kernels::neon {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
    using reg = float32x4_t;
    static constexpr std::size_t width = 4;
    static reg zero() { return vdupq_n_f32(0.0f); }
    static reg load(const float* p) { return vld1q_f32(p); }
    static void store(float* p, reg v) { vst1q_f32(p, v); }
    static reg set1(float x) { return vdupq_n_f32(x); }
    static reg fmadd(reg a, reg b, reg c) { return vfmaq_f32(c, a, b); }
    static reg add(reg a, reg b) { return vaddq_f32(a, b); }
    static float hsum(reg v) { return vaddvq_f32(v); }
};

template <>
struct Vec<double> {
    using reg = float64x2_t;
    static constexpr std::size_t width = 2;
    static reg zero() { return vdupq_n_f64(0.0); }
    static reg load(const double* p) { return vld1q_f64(p); }
    static void store(double* p, reg v) { vst1q_f64(p, v); }
    static reg set1(double x) { return vdupq_n_f64(x); }
    static reg fmadd(reg a, reg b, reg c) { return vfmaq_f64(c, a, b); }
    static reg add(reg a, reg b) { return vaddq_f64(a, b); }
    static double hsum(reg v) { return vaddvq_f64(v); }
};

template <typename T, int MR, int NV>
inline void tile(std::size_t K, const T* A, std::size_t a_row, std::size_t a_col, const T* B,
                 std::size_t ldb, T* C, std::size_t ldc) {
    using V = Vec<T>;
    typename V::reg acc[MR][NV];
    for (int r = 0; r < MR; ++r)
        for (int v = 0; v < NV; ++v) acc[r][v] = V::zero();
    for (std::size_t k = 0; k < K; ++k) {
        const T* b = B + k * ldb;
        typename V::reg bv[NV];
        for (int v = 0; v < NV; ++v) bv[v] = V::load(b + v * V::width);
        for (int r = 0; r < MR; ++r) {
            const auto a = V::set1(A[r * a_row + k * a_col]);
            for (int v = 0; v < NV; ++v) acc[r][v] = V::fmadd(a, bv[v], acc[r][v]);
        }
    }
    for (int r = 0; r < MR; ++r) {
        T* c = C + r * ldc;
        for (int v = 0; v < NV; ++v) {
            V::store(c + v * V::width, V::add(V::load(c + v * V::width), acc[r][v]));
        }
    }
}

template <typename T, int MR>
void row_block(std::size_t N, std::size_t K, const T* A, std::size_t a_row, std::size_t a_col,
               const T* B, std::size_t ldb, T* C, std::size_t ldc) {
    constexpr std::size_t w = Vec<T>::width;
    std::size_t j = 0;
    for (; j + 4 * w <= N; j += 4 * w) {
        tile<T, MR, 4>(K, A, a_row, a_col, B + j, ldb, C + j, ldc);
    }
    for (; j + w <= N; j += w) {
        tile<T, MR, 1>(K, A, a_row, a_col, B + j, ldb, C + j, ldc);
    }
    for (; j < N; ++j) {
        for (int r = 0; r < MR; ++r) {
            T acc = 0;
            for (std::size_t k = 0; k < K; ++k) {
                acc = __builtin_fma(A[r * a_row + k * a_col], B[k * ldb + j], acc);
            }
            C[r * ldc + j] += acc;
        }
    }
}

template <typename T>
void strided_gemm(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t a_row,
                  std::size_t a_col, const T* B, std::size_t ldb, T* C, std::size_t ldc) {
    constexpr std::size_t panel = 32 * Vec<T>::width;
    for (std::size_t j0 = 0; j0 < N; j0 += panel) {
        const std::size_t nb = std::min(panel, N - j0);
        std::size_t i = 0;
        for (; i + 4 <= M; i += 4) {
            row_block<T, 4>(nb, K, A + i * a_row, a_row, a_col, B + j0, ldb, C + i * ldc + j0, ldc);
        }
        for (; i < M; ++i) {
            row_block<T, 1>(nb, K, A + i * a_row, a_row, a_col, B + j0, ldb, C + i * ldc + j0, ldc);
        }
    }
}

template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    strided_gemm<T>(M, N, K, A, lda, 1, B, ldb, C, ldc);
}

template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    strided_gemm<T>(M, N, K, A, 1, lda, B, ldb, C, ldc);
}

template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    using V = Vec<T>;
    for (std::size_t i = 0; i < M; ++i) {
        const T* a = A + i * lda;
        for (std::size_t j = 0; j < N; ++j) {
            const T* b = B + j * ldb;
            auto acc = V::zero();
            std::size_t k = 0;
            for (; k + V::width <= K; k += V::width) {
                acc = V::fmadd(V::load(a + k), V::load(b + k), acc);
            }
            T sum = V::hsum(acc);
            for (; k < K; ++k) {
                sum = __builtin_fma(a[k], b[k], sum);
            }
            C[i * ldc + j] += sum;
        }
    }
}

}  // namespace

template <typename T>
const GemmTable<T>& table() {
    static const GemmTable<T> t{&gemm_nn<T>, &gemm_nt<T>, &gemm_tn<T>};
    return t;
}

template const GemmTable<float>& table<float>();
template const GemmTable<double>& table<double>();

}  // namespace parceldelin::nn::kernels::neon
