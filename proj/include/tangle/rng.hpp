#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace tangle {

// SplitMix64 step; used for seed mixing and substream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hash a (seed, a, b) triple into a fresh stream seed. Distinct inputs give
// decorrelated streams, so per-arrival substreams never overlap run streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b + 0x632be59bd9b4e019ULL;
    h ^= splitmix64(s);
    return h;
}

// Seeded random stream. Draw helpers are hand-rolled on the raw 64-bit
// output so sequences are identical on every platform for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(bootstrap(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    // Poisson draw by inversion (sequential search of the CDF). Exact for the
    // moderate means used here; guarded against float stalls in the far tail.
    std::int64_t poisson(double mean) {
        if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
        if (mean == 0.0) return 0;
        if (mean > 600.0) throw std::invalid_argument("poisson: mean too large for inversion");
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::int64_t k = 0;
        const std::int64_t cap = static_cast<std::int64_t>(mean * 20.0) + 1000;
        while (u > cdf && k < cap) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

private:
    static std::mt19937_64 bootstrap(std::uint64_t seed) {
        // Expand the user seed so nearby seeds do not give correlated states.
        std::uint64_t s = seed;
        return std::mt19937_64(splitmix64(s));
    }

    std::mt19937_64 engine_;
};

}  // namespace tangle
