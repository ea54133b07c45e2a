#pragma once

#include <cstdint>
#include <random>

namespace seq2vec {

// splitmix64 (Steele et al.), used for seed derivation so that worker /
// epoch / trial streams are decorrelated functions of one base seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a) {
    return splitmix64(base ^ splitmix64(a + 1));
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(base, a), b);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                              std::uint64_t c) {
    return mix_seed(mix_seed(base, a, b), c);
}

using Rng = std::mt19937_64;

// Unbiased integer in [0, n). Avoids std::uniform_int_distribution, whose
// draw sequence is implementation-defined; this mapping is fixed.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t rem = (~std::uint64_t{0} % n + 1) % n;  // 2^64 mod n
    const std::uint64_t bound = std::uint64_t{0} - rem;         // multiple of n, or 0 if rem==0
    std::uint64_t x = rng();
    while (rem != 0 && x >= bound) x = rng();
    return x % n;
}

// Uniform double in [0, 1), 53-bit resolution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace seq2vec
