#pragma once

// Counter-based RNG (Philox4x32-10) and noise streams.
//
// Every Gaussian draw is a pure function of (seed, trajectory, stream, step,
// lane), so ensembles reproduce bit-exactly under any parallel schedule and
// checkpoints only need to store the step counters.

#include <cmath>
#include <cstdint>

namespace sflab {

namespace detail {

inline void philox_round(uint32_t& c0, uint32_t& c1, uint32_t& c2, uint32_t& c3, uint32_t k0,
                         uint32_t k1) {
    constexpr uint64_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    uint64_t p0 = M0 * uint64_t(c0);
    uint64_t p1 = M1 * uint64_t(c2);
    uint32_t h0 = uint32_t(p0 >> 32), l0 = uint32_t(p0);
    uint32_t h1 = uint32_t(p1 >> 32), l1 = uint32_t(p1);
    uint32_t n0 = h1 ^ c1 ^ k0;
    uint32_t n1 = l1;
    uint32_t n2 = h0 ^ c3 ^ k1;
    uint32_t n3 = l0;
    c0 = n0; c1 = n1; c2 = n2; c3 = n3;
}

struct PhiloxBlock {
    uint32_t r[4];
};

inline PhiloxBlock philox4x32(uint64_t key, uint64_t ctr_hi, uint64_t ctr_lo) {
    uint32_t c0 = uint32_t(ctr_lo), c1 = uint32_t(ctr_lo >> 32);
    uint32_t c2 = uint32_t(ctr_hi), c3 = uint32_t(ctr_hi >> 32);
    uint32_t k0 = uint32_t(key), k1 = uint32_t(key >> 32);
    constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int i = 0; i < 10; ++i) {
        philox_round(c0, c1, c2, c3, k0, k1);
        k0 += W0;
        k1 += W1;
    }
    return {{c0, c1, c2, c3}};
}

// Uniform in (0,1) from two 32-bit words (53-bit resolution, never 0).
inline double to_unit(uint32_t hi, uint32_t lo) {
    uint64_t bits = (uint64_t(hi) << 21) ^ (uint64_t(lo) >> 11);
    return (double(bits) + 0.5) * (1.0 / 9007199254740992.0);  // 2^-53
}

}  // namespace detail

// One logical Gaussian stream: (seed; trajectory, stream id) fixed, a step
// counter advancing one unit per draw.
struct NoiseStream {
    uint64_t seed = 0;
    uint64_t trajectory = 0;
    uint64_t stream = 0;  // encodes (mode, component) or any sub-channel
    uint64_t step = 0;

    // Standard normal, advances the counter.
    double normal() {
        auto b = detail::philox4x32(seed ^ 0x5851F42D4C957F2Dull,
                                    (trajectory << 32) ^ stream, step++);
        double u1 = detail::to_unit(b.r[0], b.r[1]);
        double u2 = detail::to_unit(b.r[2], b.r[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
    // Uniform in (0,1), advances the counter.
    double uniform() {
        auto b = detail::philox4x32(seed ^ 0x9E3779B97F4A7C15ull,
                                    (trajectory << 32) ^ stream, step++);
        return detail::to_unit(b.r[0], b.r[1]);
    }
};

// Gaussian increment of a Wiener process over dt.
inline double wiener_increment(NoiseStream& s, double dt) {
    if (dt <= 0) throw std::invalid_argument("wiener_increment: dt must be > 0");
    return std::sqrt(dt) * s.normal();
}

// Exact one-step update of dz = -lambda z dt + q dW:
// z' = z e^{-lambda dt} + q sqrt((1 - e^{-2 lambda dt})/(2 lambda)) xi.
inline double ou_exact_step(double z, double lambda, double q, double dt, NoiseStream& s) {
    if (lambda <= 0) throw std::invalid_argument("ou_exact_step: lambda must be > 0");
    double decay = std::exp(-lambda * dt);
    double amp = q * std::sqrt((1.0 - decay * decay) / (2.0 * lambda));
    return z * decay + amp * s.normal();
}

// Draw from the stationary law N(0, q^2/(2 lambda)).
inline double ou_stationary_draw(double lambda, double q, NoiseStream& s) {
    return q / std::sqrt(2.0 * lambda) * s.normal();
}

}  // namespace sflab
