#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace wbeval {

/// Seedable generator with a fully specified output sequence.
///
/// The engine is std::mt19937_64, whose sequence the C++ standard fixes for
/// every implementation. The standard distributions are not portable, so the
/// conversions below are done by hand: bounded integers by rejection on the
/// raw 64-bit output, reals from the top 53 bits.
class Rng {
public:
    static constexpr std::string_view kName = "mt19937_64";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Reject the low partial bucket so every residue is equally likely.
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform real in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; used for test data, not for plans.
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Derives an independent seed for sub-stream `stream` (splitmix64 finalizer
/// over the combined value).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace wbeval
