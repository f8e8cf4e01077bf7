#pragma once

#include <cstdint>

namespace approxgrad {

/// splitmix64 finalizer (Steele et al., constants from the reference
/// implementation).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Counter-based generator: draw i of stream (seed, stream) is
/// mix64(key + i * golden_gamma), so sequences are reproducible across
/// platforms and languages given the same constants. Normal deviates use
/// the 12-sum uniform approximation, which keeps generation exactly
/// reproducible in IEEE doubles (no libm transcendentals).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix64(seed + 0x9E3779B97F4A7C15ull * (stream + 1))) {}

    std::uint64_t next_u64() { return mix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

    /// Uniform in [0, 1), 53 mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Approximately standard normal: sum of 12 uniforms minus 6.
    double normal() {
        double acc = 0.0;
        for (int i = 0; i < 12; ++i) acc += uniform();
        return acc - 6.0;
    }

    /// Uniform index in [0, n).
    std::uint64_t index(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace approxgrad
