#pragma once
// Portable random helpers. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions are not, so draws are mapped by hand.

#include <cstdint>
#include <random>
#include <string_view>

namespace venus::rng {

using Engine = std::mt19937_64;

/// SplitMix64 step; used to derive independent seeds and constant tables.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Mixes a seed with a stream tag so different consumers of one seed stay independent.
constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t s = seed ^ (stream * 0xD1B54A32D192ED03ULL);
    return splitmix64(s);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) without modulo bias. bound must be > 0.
inline std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
        x = engine();
    } while (x >= limit);
    return x % bound;
}

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

}  // namespace venus::rng
