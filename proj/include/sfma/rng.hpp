#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

namespace sfma {

// 64-bit FNV-1a over raw bytes; used only for seed derivation, not hashing
// of untrusted data.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 1469598103934665603ull) {
    return fnv1a64(s.data(), s.size(), h);
}

/// Derives the seed of a named RNG stream from a base seed.
///
/// Streams are content-addressed: the derived seed depends only on
/// (base, tag, index), never on how many streams were created before it.
/// This is what makes independent runs and loops reproducible in isolation.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t h = fnv1a64(&base, sizeof base);
    h = fnv1a64(tag, h);
    h = fnv1a64(&index, sizeof index, h);
    // splitmix64 finalizer for avalanche
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

/// Thin wrapper around a seeded Mersenne Twister with the handful of draw
/// kinds this project needs. One Rng instance per stream use site.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    // Uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    int bit() { return static_cast<int>(below(2)); }

    double normal(double mean, double std_dev) {
        if (std_dev == 0.0) return mean;
        return std::normal_distribution<double>(mean, std_dev)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace sfma
