#pragma once

// Seeded randomness. Every stream is a std::mt19937_64 whose seed is derived
// from (experiment seed, purpose tag, round, index) through SplitMix64, so
// independent consumers never share state and any stream can be rebuilt from
// its coordinates alone.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cncfl {

using Rng = std::mt19937_64;

enum class Stream : std::uint64_t {
    Init = 1,
    Dataset,
    Partition,
    LocalTrain,
    Selection,
    Interference,
    Distance,
    Fading,
    BaselineRb,
    Capacity,
    P2pMatrix,
    P2pRandom,
    Oracle,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = splitmix64(seed);
    for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t round = 0, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, {static_cast<std::uint64_t>(stream), round, index}));
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace cncfl

namespace cncfl {

/// Seed for one client's local training inside a round.
inline std::uint64_t client_seed(std::uint64_t round_seed, int client_id) noexcept {
    return derive_seed(round_seed, {0xC11E47ULL, static_cast<std::uint64_t>(client_id)});
}

} // namespace cncfl
