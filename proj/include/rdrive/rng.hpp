#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <span>

namespace rdrive {

// Seeded xoshiro256** generator. Everything random in the system (file keys,
// ids, link sampling, scenario draws) flows through one of these so that a
// run is fully reproducible from its seed. Distributions are hand-rolled
// instead of <random> ones, which are not portable across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        // SplitMix64 expansion of the seed into the xoshiro state.
        uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9E3779B97F4A7C15ull;
            uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            word = z ^ (z >> 31);
        }
    }

    uint64_t nextU64() {
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

    // Uniform in [0, 1) with 53 bits of precision.
    double nextDouble() { return static_cast<double>(nextU64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound).
    uint64_t nextBounded(uint64_t bound) {
        // Rejection sampling to avoid modulo bias.
        const uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = nextU64();
            if (r >= threshold) return r % bound;
        }
    }

    // Standard normal via Box-Muller; one spare value cached.
    double nextGaussian() {
        if (haveSpare_) {
            haveSpare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = nextDouble();
        } while (u1 <= 0.0);
        const double u2 = nextDouble();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        haveSpare_ = true;
        return radius * std::cos(angle);
    }

    void fillBytes(std::span<uint8_t> out) {
        size_t i = 0;
        while (i < out.size()) {
            uint64_t word = nextU64();
            for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
                out[i] = static_cast<uint8_t>(word >> (8 * b));
            }
        }
    }

    // Derives an independent stream, e.g. one per scenario run.
    Rng fork(uint64_t salt) { return Rng(nextU64() ^ (salt * 0x9E3779B97F4A7C15ull)); }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool haveSpare_ = false;
};

}  // namespace rdrive
