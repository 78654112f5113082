#include <vector>

#include "parceldelin/nn/kernels.hpp"

namespace parceldelin::nn::kernels::scalar {
namespace {

template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    std::vector<T> acc(N);
    for (std::size_t i = 0; i < M; ++i) {
        std::fill(acc.begin(), acc.end(), T(0));
        for (std::size_t k = 0; k < K; ++k) {
            const T a = A[i * lda + k];
            const T* b = B + k * ldb;
            for (std::size_t j = 0; j < N; ++j) {
                acc[j] += a * b[j];
            }
        }
        T* c = C + i * ldc;
        for (std::size_t j = 0; j < N; ++j) {
            c[j] += acc[j];
        }
    }
}

template <typename T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    for (std::size_t i = 0; i < M; ++i) {
        const T* a = A + i * lda;
        for (std::size_t j = 0; j < N; ++j) {
            const T* b = B + j * ldb;
            T acc = 0;
            for (std::size_t k = 0; k < K; ++k) {
                acc += a[k] * b[k];
            }
            C[i * ldc + j] += acc;
        }
    }
}

template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda, const T* B,
             std::size_t ldb, T* C, std::size_t ldc) {
    std::vector<T> acc(N);
    for (std::size_t i = 0; i < M; ++i) {
        std::fill(acc.begin(), acc.end(), T(0));
        for (std::size_t k = 0; k < K; ++k) {
            const T a = A[k * lda + i];
            const T* b = B + k * ldb;
            for (std::size_t j = 0; j < N; ++j) {
                acc[j] += a * b[j];
            }
        }
        T* c = C + i * ldc;
        for (std::size_t j = 0; j < N; ++j) {
            c[j] += acc[j];
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

}  // namespace parceldelin::nn::kernels::scalar
