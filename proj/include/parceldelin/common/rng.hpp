#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace parceldelin {

// Platform-independent random source. std::mt19937_64 has a fully specified
// output sequence, but the standard distributions do not, so every draw used
// by the toolkit goes through the helpers below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n) by rejection sampling; n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    // Uniform double in [0, 1) with 53 random bits.
    double uniform();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the spare value is cached.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stateless 64-bit mixer (splitmix64 finalizer). Used to derive independent
// per-tile and per-epoch seeds so that work order never changes the output.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace parceldelin
