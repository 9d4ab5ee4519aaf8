#pragma once

#include <cstdint>
#include <cmath>

namespace pmp {

// splitmix64: used both as a PRNG and as the seed fan-out so that derived
// streams (utilities, tie-breaks, engine noise, ...) are independent of the
// order in which consumers are added.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() {
        return (next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Box-Muller, one value per call (second draw discarded for stream
    // simplicity; determinism matters more than throughput here)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // integer in [0, n)
    uint64_t below(uint64_t n) {
        // rejection-free modulo is fine at our scales; keep it unbiased anyway
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }
};

// Derive a child seed from (root, purpose-tag, index).
inline uint64_t derive_seed(uint64_t root, uint64_t tag, uint64_t index = 0) {
    SplitMix64 g(root ^ (tag * 0x9e3779b97f4a7c15ULL) ^ (index * 0xd1b54a32d192ed03ULL));
    g.next();
    return g.next();
}

// purpose tags for derived streams
namespace seed_tag {
constexpr uint64_t utilities    = 0x01;
constexpr uint64_t tiebreak     = 0x02;
constexpr uint64_t course_tb    = 0x03;
constexpr uint64_t engine_noise = 0x04;
constexpr uint64_t capacities   = 0x05;
constexpr uint64_t choice_sets  = 0x06;
constexpr uint64_t vertical     = 0x07;
constexpr uint64_t environments = 0x08;
}

} // namespace pmp
