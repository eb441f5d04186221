#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace pcw {

// Counter-based splitmix64 generator. Fully specified arithmetic, so a given
// seed yields the same stream on every platform. std::normal_distribution is
// implementation-defined, hence the hand-rolled Box-Muller below.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased and
    // platform-independent.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Standard normal via Box-Muller. The sine half of the pair is discarded
    // so the stream position is a pure function of the call count.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_;
};

// FNV-1a over arbitrary bytes; used to derive independent sub-streams.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

// Seed for a named sub-stream, e.g. one per parameter tensor or per sample.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(seed >> (8 * i));
    return fnv1a64(tag, fnv1a64(bytes, 8));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
    return derive_seed(seed, tag) ^ index;
}

}  // namespace pcw
