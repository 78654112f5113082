// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "parceldelin/nn/kernels.hpp"

namespace parceldelin::nn::kernels::avx2 {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
    using reg = __m256;
    static constexpr std::size_t width = 8;
    static reg zero() { return _mm256_setzero_ps(); }
    static reg load(const float* p) { return _mm256_loadu_ps(p); }
    static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
    static reg set1(float x) { return _mm256_set1_ps(x); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
    static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
    static __m256i mask(std::size_t n) {
        alignas(32) static const int table[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
        return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 8 - n));
    }
    static reg mload(const float* p, __m256i m) { return _mm256_maskload_ps(p, m); }
    static void mstore(float* p, __m256i m, reg v) { _mm256_maskstore_ps(p, m, v); }
    static float hsum(reg v) {
        __m128 lo = _mm256_castps256_ps128(v);
        __m128 hi = _mm256_extractf128_ps(v, 1);
        lo = _mm_add_ps(lo, hi);
        __m128 shuf = _mm_movehdup_ps(lo);
        __m128 sums = _mm_add_ps(lo, shuf);
        shuf = _mm_movehl_ps(shuf, sums);
        sums = _mm_add_ss(sums, shuf);
        return _mm_cvtss_f32(sums);
    }
};

template <>
struct Vec<double> {
    using reg = __m256d;
    static constexpr std::size_t width = 4;
    static reg zero() { return _mm256_setzero_pd(); }
    static reg load(const double* p) { return _mm256_loadu_pd(p); }
    static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
    static reg set1(double x) { return _mm256_set1_pd(x); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
    static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
    static __m256i mask(std::size_t n) {
        alignas(32) static const long long table[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
        return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 4 - n));
    }
    static reg mload(const double* p, __m256i m) { return _mm256_maskload_pd(p, m); }
    static void mstore(double* p, __m256i m, reg v) { _mm256_maskstore_pd(p, m, v); }
    static double hsum(reg v) {
        __m128d lo = _mm256_castpd256_pd128(v);
        __m128d hi = _mm256_extractf128_pd(v, 1);
        lo = _mm_add_pd(lo, hi);
        __m128d high64 = _mm_unpackhi_pd(lo, lo);
        return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
    }
};

// Register tile of MR rows x NV vectors of C. A element (i, k) lives at
// A[i * a_row + k * a_col], which covers both A and A^T.
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

// Fewer than one vector of columns left: masked loads keep the tail on the
// same FMA path as full tiles.
template <typename T, int MR>
inline void tail_tile(std::size_t n, std::size_t K, const T* A, std::size_t a_row, std::size_t a_col,
                      const T* B, std::size_t ldb, T* C, std::size_t ldc) {
    using V = Vec<T>;
    const __m256i m = V::mask(n);
    typename V::reg acc[MR];
    for (int r = 0; r < MR; ++r) acc[r] = V::zero();
    for (std::size_t k = 0; k < K; ++k) {
        const auto bv = V::mload(B + k * ldb, m);
        for (int r = 0; r < MR; ++r) acc[r] = V::fmadd(V::set1(A[r * a_row + k * a_col]), bv, acc[r]);
    }
    for (int r = 0; r < MR; ++r) {
        T* c = C + r * ldc;
        V::mstore(c, m, V::add(V::mload(c, m), acc[r]));
    }
}

template <typename T, int MR>
void row_block(std::size_t N, std::size_t K, const T* A, std::size_t a_row, std::size_t a_col,
               const T* B, std::size_t ldb, T* C, std::size_t ldc) {
    constexpr std::size_t w = Vec<T>::width;
    std::size_t j = 0;
    for (; j + 2 * w <= N; j += 2 * w) {
        tile<T, MR, 2>(K, A, a_row, a_col, B + j, ldb, C + j, ldc);
    }
    for (; j + w <= N; j += w) {
        tile<T, MR, 1>(K, A, a_row, a_col, B + j, ldb, C + j, ldc);
    }
    if (j < N) tail_tile<T, MR>(N - j, K, A, a_row, a_col, B + j, ldb, C + j, ldc);
}

// Column panels outermost keep a K x 2w slice of B hot across row tiles.
template <typename T>
void strided_gemm(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t a_row,
                  std::size_t a_col, const T* B, std::size_t ldb, T* C, std::size_t ldc) {
    constexpr std::size_t panel = 16 * Vec<T>::width;
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

template <typename T, int MR, int NR>
inline void dot_tile(std::size_t K, const T* A, std::size_t lda, const T* B, std::size_t ldb, T* C,
                     std::size_t ldc) {
    using V = Vec<T>;
    typename V::reg acc[MR][NR];
    for (int r = 0; r < MR; ++r)
        for (int s = 0; s < NR; ++s) acc[r][s] = V::zero();
    std::size_t k = 0;
    for (; k + V::width <= K; k += V::width) {
        typename V::reg bv[NR];
        for (int s = 0; s < NR; ++s) bv[s] = V::load(B + s * ldb + k);
        for (int r = 0; r < MR; ++r) {
            const auto av = V::load(A + r * lda + k);
            for (int s = 0; s < NR; ++s) acc[r][s] = V::fmadd(av, bv[s], acc[r][s]);
        }
    }
    for (int r = 0; r < MR; ++r) {
        for (int s = 0; s < NR; ++s) {
            T sum = V::hsum(acc[r][s]);
            for (std::size_t kk = k; kk < K; ++kk) {
                sum = __builtin_fma(A[r * lda + kk], B[s * ldb + kk], sum);
            }
            C[r * ldc + s] += sum;
        }
    }
}

template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    std::size_t i = 0;
    for (; i + 4 <= M; i += 4) {
        std::size_t j = 0;
        for (; j + 2 <= N; j += 2) {
            dot_tile<T, 4, 2>(K, A + i * lda, lda, B + j * ldb, ldb, C + i * ldc + j, ldc);
        }
        for (; j < N; ++j) {
            dot_tile<T, 4, 1>(K, A + i * lda, lda, B + j * ldb, ldb, C + i * ldc + j, ldc);
        }
    }
    for (; i < M; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            dot_tile<T, 1, 1>(K, A + i * lda, lda, B + j * ldb, ldb, C + i * ldc + j, ldc);
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

}  // namespace parceldelin::nn::kernels::avx2
