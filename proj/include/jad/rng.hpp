#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace jad {

/// SplitMix64 generator. Cheap to construct, so every sample gets its own
/// stream derived from the run seed instead of sharing one engine.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(*this); }

    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(*this);
    }

private:
    std::uint64_t state_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// Per-purpose seed derivations. Every consumer of randomness goes through one
// of these so a single run seed reproduces the whole pipeline.
inline std::uint64_t attack_seed(std::uint64_t seed, std::uint64_t sample) {
    return seed ^ (std::uint64_t{0x41} << 32) ^ sample;
}
inline std::uint64_t detect_seed(std::uint64_t seed, std::uint64_t sample) {
    return seed ^ (std::uint64_t{0x44} << 32) ^ sample;
}
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t sample) { return seed ^ sample; }

}  // namespace jad
