#pragma once

#include <cstdint>
#include <random>

namespace factimp {

// splitmix64; used to derive independent substreams from one master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97f4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Deterministic substream seed: hash of (master, tag, index). Trajectories,
/// replications, and per-unit streams each get their own tag/index pair so
/// concurrent use never shares engine state.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
    std::uint64_t s = master ^ (0xA0761D6478BD642Full * (tag + 1));
    std::uint64_t a = splitmix64(s);
    s ^= 0xE7037ED1A0B428DBull * (index + 1);
    std::uint64_t b = splitmix64(s);
    return a ^ (b << 1);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

}  // namespace factimp
