#pragma once

#include <cmath>
#include <cstdint>

namespace hscal {

// Counter-based random streams: every variate is a pure function of
// (seed, c0..c3), so simulated cubes are byte-identical at any worker count
// and any evaluation order.
namespace rng {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1 = 0,
                          std::uint64_t c2 = 0, std::uint64_t c3 = 0) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ c0);
    h = mix64(h ^ c1);
    h = mix64(h ^ c2);
    h = mix64(h ^ c3);
    return h;
}

// Uniform in (0, 1]: never returns 0 so it is safe under log().
inline double uniform(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1 = 0,
                      std::uint64_t c2 = 0, std::uint64_t c3 = 0) {
    const std::uint64_t h = hash(seed, c0, c1, c2, c3);
    return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two decorrelated counter channels.
inline double gaussian(std::uint64_t seed, std::uint64_t c0, std::uint64_t c1 = 0,
                       std::uint64_t c2 = 0, std::uint64_t c3 = 0) {
    const double u1 = uniform(seed, c0, c1, c2, 2 * c3);
    const double u2 = uniform(seed, c0, c1, c2, 2 * c3 + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace rng
}  // namespace hscal
