// rng.hpp -- seedable RNG with independent substreams.
//
// One root seed spawns an arbitrary number of statistically independent
// streams, keyed by (root, stream_id).  Stream derivation runs each key
// through SplitMix64, which is also used to fill the xoshiro256++ state,
// so streams with adjacent ids share no state structure.
#pragma once
#include <cstdint>
#include <cmath>
#include <limits>

namespace dsprt {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++ (Blackman/Vigna), public domain reference algorithm.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// Value-form mix: derive an unrelated seed from `x` without advancing state.
inline std::uint64_t mix64(std::uint64_t x) { return splitmix64(x); }

// Derive the seed of substream `stream` of trial `trial` under root `root`.
inline std::uint64_t substream_seed(std::uint64_t root, std::uint64_t trial,
                                    std::uint64_t stream) {
    std::uint64_t x = root;
    (void)splitmix64(x);
    x ^= 0x6a09e667f3bcc909ULL + trial;
    (void)splitmix64(x);
    x ^= 0xbb67ae8584caa73bULL + stream;
    return splitmix64(x);
}

// Standard normal sampler (Marsaglia polar, caches the spare deviate).
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    double uniform() {  // in (0,1)
        return (eng_() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

private:
    Xoshiro256pp eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dsprt
