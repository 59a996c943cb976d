#pragma once

#include <cstdint>
#include <initializer_list>

namespace oscnet {

// splitmix64 step; used for seeding and for mixing stream ids.
inline uint64_t splitmix64(uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// splitmix64 finalizer on a plain value
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, tag, indices...).
// Deterministic, order- and position-sensitive.
inline uint64_t derive_seed(std::initializer_list<uint64_t> parts) {
    uint64_t s = 0x6a09e667f3bcc909ull;
    uint64_t i = 1;
    for (uint64_t p : parts) {
        s = mix64(s + 0x9e3779b97f4a7c15ull * i + mix64(p * 0xff51afd7ed558ccdull + i));
        ++i;
    }
    return s;
}

// Stream purpose tags; keeps derived streams disjoint across uses of one seed.
enum class Stream : uint64_t {
    WeightInit = 1,
    TrainShuffle = 2,
    TrainNoise = 3,
    Dropout = 4,
    EvalNoise = 5,
    AttackNoise = 6,
    AttackInit = 7,
    Subset = 8,
    FitNoise = 9,
    SynthData = 10,
};

inline uint64_t derive_seed(uint64_t seed, Stream tag, uint64_t a = 0, uint64_t b = 0) {
    return derive_seed({seed, static_cast<uint64_t>(tag), a, b});
}

// xoshiro256++, seeded via splitmix64. Self-contained so that streams are
// bit-reproducible across platforms and standard library versions.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // in [0,1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // in [0,n), small modulo bias is irrelevant for n << 2^64
    uint64_t below(uint64_t n) { return next_u64() % n; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

} // namespace oscnet
