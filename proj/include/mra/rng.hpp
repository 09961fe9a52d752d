#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mra {

// Counter-based generator built on the SplitMix64 finaliser. Every draw is a
// pure function of (seed, stream, counter), so a value can be recomputed
// without replaying the sequence and observations can be generated in any
// order. The scheme, which is what a reimplementation needs to match:
//
//   key(seed, stream)       = mix64(seed + G * (stream + 1))
//   bits(seed, stream, c)   = mix64(key(seed, stream) + G * (c + 1))
//   uniform(seed, stream, c)= (bits >> 11) * 2^-53              in [0, 1)
//   normal(seed, stream, c) = sqrt(-2 ln(1 - U0)) * cos(2 pi U1)
//                             U0 = uniform(.., 2c), U1 = uniform(.., 2c + 1)
//
// with G = 0x9E3779B97F4A7C15 and mix64 the SplitMix64 output function.
namespace rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

enum Stream : std::uint64_t {
    kShifts = 0,
    kComponents = 1,
    kNoise = 2,
    kSignal = 3,
};

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t bits(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) noexcept {
    const std::uint64_t key = mix64(seed + kGolden * (stream + 1));
    return mix64(key + kGolden * (counter + 1));
}

constexpr double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
    return static_cast<double>(bits(seed, stream, counter) >> 11) * 0x1.0p-53;
}

inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) noexcept {
    const double u0 = uniform(seed, stream, 2 * counter);
    const double u1 = uniform(seed, stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log1p(-u0)) * std::cos(2.0 * std::numbers::pi * u1);
}

/// Uniform integer in [0, n).
constexpr std::uint64_t below(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                              std::uint64_t n) noexcept {
    // 128-bit multiply-shift; bias is below 2^-64 * n
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(bits(seed, stream, counter)) * n) >> 64);
}

}  // namespace rng
}  // namespace mra
