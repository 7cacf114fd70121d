#pragma once

#include <cmath>
#include <cstdint>

namespace turbres {

/// Counter-based PRNG: SplitMix64 finalizer over (seed, stream, counter).
/// Fixed algorithm so seeded runs reproduce bit-identically; independent
/// streams come from distinct stream ids (the simulator uses one per frame
/// and channel).
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream)
        : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ull))) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9E3779B97F4A7C15ull;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    uint64_t next_u64() { return mix(key_ + counter_++ * 0x9E3779B97F4A7C15ull); }

    /// Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (std::normal_distribution is not
    /// reproducible across standard libraries).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace turbres
