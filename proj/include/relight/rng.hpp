#pragma once

#include <cstdint>
#include <random>

#include "relight/vec.hpp"

namespace relight {

// Uniform in [0,1) from the top 53 bits; avoids std::uniform_real_distribution
// so streams are identical across standard-library implementations.
inline double uniform_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combines seed words into one stream seed (per-pixel MC streams etc.).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

inline Vec3 uniform_sphere_dir(std::mt19937_64& rng) {
    double z = 1.0 - 2.0 * uniform_double(rng);
    double phi = kTwoPi * uniform_double(rng);
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace relight
