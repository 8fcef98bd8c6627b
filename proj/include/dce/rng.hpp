#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace dce::rng {

// Philox4x32-10 counter-based generator. Every output block is a pure
// function of (key, counter), so independent streams are addressed rather
// than advanced: stream/index pairs can be consumed in any order, from any
// thread, and always reproduce the same values.

struct Block {
    std::array<std::uint32_t, 4> w;
};

namespace detail {

inline void philox_round(std::array<std::uint32_t, 4>& c, std::uint32_t k0, std::uint32_t k1) {
    constexpr std::uint64_t M0 = 0xD2511F53u;
    constexpr std::uint64_t M1 = 0xCD9E8D57u;
    const std::uint64_t p0 = M0 * c[0];
    const std::uint64_t p1 = M1 * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
}

} // namespace detail

inline Block philox4x32(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) {
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    std::array<std::uint32_t, 4> c = {
        static_cast<std::uint32_t>(ctr_lo), static_cast<std::uint32_t>(ctr_lo >> 32),
        static_cast<std::uint32_t>(ctr_hi), static_cast<std::uint32_t>(ctr_hi >> 32)};
    for (int r = 0; r < 10; ++r) {
        detail::philox_round(c, k0, k1);
        k0 += W0;
        k1 += W1;
    }
    return Block{c};
}

// Raw keyed block with explicit 4x32 counter, used for the known-answer tests.
inline Block philox4x32_raw(std::array<std::uint32_t, 2> key, std::array<std::uint32_t, 4> ctr) {
    constexpr std::uint32_t W0 = 0x9E3779B9u;
    constexpr std::uint32_t W1 = 0xBB67AE85u;
    std::uint32_t k0 = key[0];
    std::uint32_t k1 = key[1];
    for (int r = 0; r < 10; ++r) {
        detail::philox_round(ctr, k0, k1);
        k0 += W0;
        k1 += W1;
    }
    return Block{ctr};
}

// A uniform double in (0,1), built from 53 bits; never returns 0 or 1.
inline double to_unit_interval(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Derives a child key, e.g. per-trial seeds from (base_seed, trial_index).
inline std::uint64_t derive_key(std::uint64_t key, std::uint64_t label, std::uint64_t index = 0) {
    const Block b = philox4x32(key ^ 0x9E3779B97F4A7C15ull, label, index);
    return (static_cast<std::uint64_t>(b.w[0]) << 32) | b.w[1];
}

// One addressable sub-stream of a keyed generator.
class Stream {
  public:
    Stream(std::uint64_t key, std::uint64_t stream_id) : key_(key), stream_(stream_id) {}

    double uniform(std::uint64_t index) const {
        const Block b = philox4x32(key_, stream_, index);
        return to_unit_interval(b.w[0], b.w[1]);
    }

    // Box-Muller pair; index addresses the pair.
    std::array<double, 2> normal_pair(std::uint64_t index) const {
        const Block b = philox4x32(key_, stream_, index);
        const double u1 = to_unit_interval(b.w[0], b.w[1]);
        const double u2 = to_unit_interval(b.w[2], b.w[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    // Circular complex Gaussian with unit variance (E|z|^2 = 1).
    std::complex<double> cnormal(std::uint64_t index) const {
        const auto [x, y] = normal_pair(index);
        return {x * M_SQRT1_2, y * M_SQRT1_2};
    }

  private:
    std::uint64_t key_;
    std::uint64_t stream_;
};

// Stream ids used across the project; kept in one place so independent
// draws never collide.
enum StreamId : std::uint64_t {
    kSourceSignals = 1,
    kSensorNoise = 2,
    kPowerIterationInit = 3,
    kTrialDerivation = 4,
    kScratch = 5,
};

} // namespace dce::rng
