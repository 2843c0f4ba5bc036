#pragma once

#include <cstdint>
#include <string_view>

namespace attribforge {

// splitmix64 stream. Used instead of <random> engines plus distributions
// because standard-library distributions are not bit-stable across
// implementations, and every draw in this project must replay identically
// from a seed on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n); n must be positive.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(
            (static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n)) >> 64);
    }

    // Uniform in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Stable per-item stream derivation: items keep their streams no matter in
// which order (or on how many threads) they are processed.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view id) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    Rng mix(global_seed ^ h);
    return mix.next();
}

} // namespace attribforge
