#pragma once

#include <cstdint>

namespace jurysim {

// splitmix64 finalizer. All randomness in the simulator is derived from this
// so that runs are bit-identical across platforms and standard-library
// versions (std:: distributions are implementation-defined).
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double unit_double(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Stateless keyed draw: a pure function of (seed, k1, k2, k3). Used for
// per-(turn, juror) decisions so results do not depend on evaluation order.
inline std::uint64_t keyed_u64(std::uint64_t seed, std::uint64_t k1,
                               std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ k1);
    h = mix64(h ^ k2);
    h = mix64(h ^ k3);
    return h;
}

inline double keyed_unit(std::uint64_t seed, std::uint64_t k1,
                         std::uint64_t k2 = 0, std::uint64_t k3 = 0) {
    return unit_double(keyed_u64(seed, k1, k2, k3));
}

// Sequential deterministic stream (splitmix64). The seed is scrambled into
// the starting state so that nearby seeds (1, 2, 3, ...) do not walk
// overlapping stretches of the same underlying sequence.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed) : state_(mix64(seed)) {}

    std::uint64_t next_u64() { return mix64(state_++); }
    double next_unit() { return unit_double(next_u64()); }

    // Uniform integer in [0, bound) without modulo bias worth worrying about
    // at the bounds used here (all bounds are tiny relative to 2^64).
    std::uint64_t next_below(std::uint64_t bound) {
        return bound == 0 ? 0 : next_u64() % bound;
    }

private:
    std::uint64_t state_;
};

} // namespace jurysim
