#include "parceldelin/nn/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "parceldelin/common/error.hpp"

namespace parceldelin::nn::kernels {
namespace {

Isa detect() {
    if (const char* env = std::getenv("PARCELDELIN_ISA")) {
        const std::string v(env);
        if (v == "scalar") return Isa::Scalar;
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
#elif defined(__aarch64__)
    return Isa::Neon;
#endif
    return Isa::Scalar;
}

std::atomic<Isa>& selected() {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

template <typename T>
const GemmTable<T>& gemm_table(Isa isa) {
    if (!isa_available(isa)) {
        throw ConfigError("instruction set '" + std::string(isa_name(isa)) + "' is not available on this CPU");
    }
    switch (isa) {
#if defined(__x86_64__) || defined(_M_X64)
        case Isa::Avx2: return avx2::table<T>();
#endif
#if defined(__aarch64__)
        case Isa::Neon: return neon::table<T>();
#endif
        default: return scalar::table<T>();
    }
}

template <typename T>
const GemmTable<T>& active() {
    return gemm_table<T>(selected().load(std::memory_order_relaxed));
}

Isa active_isa() { return selected().load(); }

void set_active_isa(Isa isa) {
    if (!isa_available(isa)) {
        throw ConfigError("instruction set '" + std::string(isa_name(isa)) + "' is not available on this CPU");
    }
    selected().store(isa);
}

template const GemmTable<float>& gemm_table<float>(Isa);
template const GemmTable<double>& gemm_table<double>(Isa);
template const GemmTable<float>& active<float>();
template const GemmTable<double>& active<double>();

}  // namespace parceldelin::nn::kernels
