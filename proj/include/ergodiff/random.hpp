#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ergodiff {

/// splitmix64 mixing step; used to derive independent sub-stream seeds from a
/// master seed without correlation between consecutive seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for a tagged sub-stream (stage, index) of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0) {
    return splitmix64(splitmix64(master ^ splitmix64(tag)) + index);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Engine& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

/// Standard normal via Box-Muller; always consumes exactly two engine draws,
/// which keeps streams aligned across calls.
inline double standard_normal(Engine& g) {
    const double u1 = 1.0 - uniform01(g); // (0, 1]
    const double u2 = uniform01(g);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Exponential with given mean; one engine draw.
inline double exponential(Engine& g, double mean) {
    return -mean * std::log(1.0 - uniform01(g));
}

} // namespace ergodiff
