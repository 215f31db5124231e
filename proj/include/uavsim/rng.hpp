#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include "uavsim/common.hpp"

namespace uavsim {

namespace detail {

// SplitMix64 finalizer. Full-avalanche on 64-bit inputs.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Derive a child seed from a parent seed and a stream tag. Used to hand
/// independent streams to stations, runs and noise generators.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return detail::mix64(detail::mix64(seed) ^ detail::mix64(tag + 0x51ed270b6a4c1ca5ULL));
}

/// Counter-based PRNG: output i is a pure function of (seed, i). No hidden
/// state beyond the counter, so identical seeds give bit-identical streams
/// on every platform. Gaussians come from Box-Muller on the uniform stream.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(detail::mix64(seed ^ 0xabcdef0123456789ULL)) {}

    std::uint64_t next_u64() { return detail::mix64(seed_ ^ detail::mix64(counter_++)); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (both variates used).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    /// Circular complex Gaussian with E|w|^2 = power.
    cplx complex_gaussian(double power) {
        const double s = std::sqrt(power / 2.0);
        return {s * gaussian(), s * gaussian()};
    }

    /// Poisson counts by Knuth's product method; fine for small means.
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace uavsim
