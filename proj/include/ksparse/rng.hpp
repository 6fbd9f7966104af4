// Counter-based random number generation (Philox4x32-10).
//
// All stochastic code in the library draws from Philox streams so that runs
// replicate exactly across platforms and thread counts: a (seed, stream)
// pair fully determines the sequence, and independent work units simply use
// distinct stream ids instead of sharing one generator.
//
// Stream conventions used by the library:
//   synthetic generation:  Philox(params.seed, 0) for A,
//                          Philox(params.seed, 1) for x0,
//                          Philox(params.seed, 2) for the noise.
//   CV cells:              seed = derive_seed(base_seed, K, fold index),
//                          restart r runs on Philox(seed, r).
//   solve restarts:        Philox(seed, restart index).
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace ksparse {

// Philox4x32-10 block cipher (Salmon, Moraes, Dror, Shaw, 2011).
// 64-bit key = seed, 128-bit counter = (stream << 64) | position.
class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

    std::uint32_t next_u32() {
        if (idx_ == 4) {
            buf_ = block(ctr_, key_);
            // 64-bit position in words 0..1; streams never collide.
            if (++ctr_[0] == 0) ++ctr_[1];
            idx_ = 0;
        }
        return buf_[idx_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform double in [0, 1), 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, bound); bound >= 1.
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t mask = bound - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            const std::uint64_t v = next_u64() & mask;
            if (v < bound) return v;
        }
    }

    // Standard normal via Box-Muller; pairs are cached.
    double next_gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int idx_ = 4;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

// SplitMix64 finalizer; used to hash seed components together.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b + 0x9E3779B97F4A7C15ull));
}

inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return derive_seed(derive_seed(a, b), c);
}

// Uniform random k-subset of {0, .., n-1}, sorted (Floyd's algorithm).
inline std::vector<int> uniform_subset(int n, int k, Philox& rng) {
    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(k));
    for (int j = n - k; j < n; ++j) {
        const int t = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
        bool taken = false;
        for (int c : chosen) {
            if (c == t) {
                taken = true;
                break;
            }
        }
        chosen.push_back(taken ? j : t);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace ksparse
