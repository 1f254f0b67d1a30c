#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mfg::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// Draws are pure functions of (key, counter), so per-particle streams are
// reproducible under any parallel work split.
namespace detail {

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& lo, uint32_t& hi) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    lo = static_cast<uint32_t>(p);
    hi = static_cast<uint32_t>(p >> 32);
}

inline std::array<uint32_t, 4> philox_round(std::array<uint32_t, 4> c,
                                            const std::array<uint32_t, 2>& k) {
    uint32_t lo0, hi0, lo1, hi1;
    mulhilo(0xD2511F53u, c[0], lo0, hi0);
    mulhilo(0xCD9E8D57u, c[2], lo1, hi1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace detail

inline std::array<uint32_t, 4> philox4x32(uint64_t key, std::array<uint32_t, 4> ctr) {
    std::array<uint32_t, 2> k = {static_cast<uint32_t>(key),
                                 static_cast<uint32_t>(key >> 32)};
    for (int round = 0; round < 10; ++round) {
        ctr = detail::philox_round(ctr, k);
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
    }
    return ctr;
}

// Stream id reserved for noise shared across all particles.
inline constexpr uint64_t kCommonStream = 0xFFFFFFFFFFFFFFFFull;

// Two independent uniforms in (0,1] from one philox block.
inline std::array<double, 2> uniform_pair(uint64_t seed, uint64_t stream, uint64_t step) {
    auto r = philox4x32(seed, {static_cast<uint32_t>(stream),
                               static_cast<uint32_t>(stream >> 32),
                               static_cast<uint32_t>(step),
                               static_cast<uint32_t>(step >> 32)});
    uint64_t a = (static_cast<uint64_t>(r[0]) << 32) | r[1];
    uint64_t b = (static_cast<uint64_t>(r[2]) << 32) | r[3];
    constexpr double scale = 1.0 / 18446744073709551616.0;  // 2^-64
    return {(a + 1.0) * scale, (b + 1.0) * scale};
}

// Standard normal pair via Box-Muller, keyed by (seed, stream, step).
inline std::array<double, 2> normal_pair(uint64_t seed, uint64_t stream, uint64_t step) {
    auto u = uniform_pair(seed, stream, step);
    double radius = std::sqrt(-2.0 * std::log(u[0]));
    double angle = 6.283185307179586476925286766559 * u[1];
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

inline double normal(uint64_t seed, uint64_t stream, uint64_t step) {
    return normal_pair(seed, stream, step)[0];
}

// Derives a child seed for independent replication streams.
inline uint64_t derive_seed(uint64_t seed, uint64_t salt) {
    auto r = philox4x32(seed, {static_cast<uint32_t>(salt),
                               static_cast<uint32_t>(salt >> 32), 0x5eedu, 0});
    return (static_cast<uint64_t>(r[0]) << 32) | r[2];
}

}  // namespace mfg::rng
