#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace ssae {

// SplitMix64. Fixed arithmetic so synthetic data and shuffles reproduce
// across platforms and languages.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (cosine branch only, two uniforms per draw).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // Independent child stream, used to give each run or repetition its own generator.
    SplitMix64 split() { return SplitMix64(next()); }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// Seed for an independent sub-stream (initialization, shuffling, dropout...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 rng(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return rng.next();
}

// Fisher-Yates with SplitMix64 (std::shuffle is implementation-defined).
template <class T>
void shuffle(std::span<T> items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace ssae
