#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qls {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent seeds from a base seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27U)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31U);
}

/// Deterministic seed derived from a base seed and a path of stream indices.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t s = splitmix64(base);
    for (auto p : path) {
        s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    }
    return s;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return derive_seed(base, {stream});
}

} // namespace qls
