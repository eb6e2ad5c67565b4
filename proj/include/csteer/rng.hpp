#pragma once

#include <array>
#include <cstdint>

namespace csteer {

// splitmix64, used to expand a 64-bit seed into generator state.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

// xoshiro256**. The algorithm is fixed so that seeded streams reproduce
// bit-for-bit across implementations; see README for the exact scheme.
class Xoshiro256ss {
public:
    explicit Xoshiro256ss(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    // Independent stream: state expanded from seed + (stream_id+1) * golden gamma.
    static Xoshiro256ss stream(uint64_t seed, uint64_t stream_id) {
        return Xoshiro256ss(seed + (stream_id + 1) * 0x9e3779b97f4a7c15ull);
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 bits of precision.
    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be positive.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(uniform01() * static_cast<double>(n)) % n;
    }

private:
    static uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<uint64_t, 4> state_;
};

}  // namespace csteer
