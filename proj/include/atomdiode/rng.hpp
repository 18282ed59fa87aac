#pragma once

#include <cstdint>

namespace atomdiode {

// splitmix64; used to expand seeds into xoshiro state.
inline uint64_t splitmix64_next(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoshiro256++; self-contained so streams are bit-identical across platforms,
// unlike the distributions in <random>.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : state_) w = splitmix64_next(sm);
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

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t state_[4];
};

// Deterministic per-trajectory stream: a documented splittable construction
// from (master seed, trajectory index), independent of thread count.
inline uint64_t trajectory_seed(uint64_t master_seed, uint64_t index) {
    uint64_t s = master_seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return splitmix64_next(s);
}

}  // namespace atomdiode
