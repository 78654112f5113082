#pragma once

#include <cstddef>
#include <string_view>

// Dense matrix-product kernels behind convolution. Every kernel exists as a
// portable scalar reference and, where the CPU supports it, a SIMD variant.
// The variant is chosen once at startup (override with PARCELDELIN_ISA=scalar)
// and is equivalence-tested against the reference.
//
// All matrices are row-major. For every output element the products are summed
// in increasing reduction index into a zero-initialized accumulator that is
// then added to C, so each variant differs from the reference only by FMA
// contraction and (for gemm_nt) lane-split partial sums.
namespace parceldelin::nn::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

template <typename T>
struct GemmTable {
    // C[M,N] += A[M,K] * B[K,N]
    void (*gemm_nn)(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda,
                    const T* B, std::size_t ldb, T* C, std::size_t ldc);
    // C[M,N] += A[M,K] * B[N,K]^T
    void (*gemm_nt)(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda,
                    const T* B, std::size_t ldb, T* C, std::size_t ldc);
    // C[M,N] += A[K,M]^T * B[K,N]
    void (*gemm_tn)(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t lda,
                    const T* B, std::size_t ldb, T* C, std::size_t ldc);
};

bool isa_available(Isa isa);

// The table for a specific ISA; throws ConfigError if it is unavailable.
template <typename T>
const GemmTable<T>& gemm_table(Isa isa);

// Table selected for this process.
template <typename T>
const GemmTable<T>& active();

Isa active_isa();
// Test hook: switch the process-wide selection.
void set_active_isa(Isa isa);

namespace scalar {
template <typename T>
const GemmTable<T>& table();
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
template <typename T>
const GemmTable<T>& table();
}
#endif

#if defined(__aarch64__)
namespace neon {
template <typename T>
const GemmTable<T>& table();
}
#endif

}  // namespace parceldelin::nn::kernels
