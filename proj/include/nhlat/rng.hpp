#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nhlat {

// SplitMix64 finalizer (Steele/Lea/Flood). Used as a stateless seed mixer.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives the RNG stream seed for one realization of an ensemble.
// Stateless: two SplitMix64 rounds over master_seed advanced by the golden
// ratio per index. Distinct indices give distinct, well-mixed streams.
// This mapping is part of the reproducibility contract; do not change it.
inline std::uint64_t seed_for(std::uint64_t master_seed, std::uint64_t realization_index) {
    std::uint64_t z = master_seed + (realization_index + 1) * 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(splitmix64_mix(z));
}

// Deterministic random stream: mt19937_64 core (output sequence fixed by the
// standard) with a hand-rolled Box-Muller transform, so normal draws are
// bit-stable across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; caches the second draw of each pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace nhlat
