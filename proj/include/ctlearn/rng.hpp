#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

namespace ctlearn {

// Counter-based generator: output k of stream `seed` is a pure function of
// (seed, k), so datasets are reproducible from the metadata alone and seed
// space can be partitioned across workers. The algorithm identifier recorded in
// dataset metadata is "splitmix64".
inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(splitmix64(seed, stream ^ 0xA5A5A5A5A5A5A5A5ULL)) {}

    std::uint64_t next_u64() { return splitmix64(seed_, counter_++); }

    // Uniform in [0, 1) with 53 random mantissa bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is tiny relative to 2^64.
        return next_u64() % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller; u clamped away from 0 so log stays finite.
        double u = uniform01();
        if (u < 0x1.0p-60) u = 0x1.0p-60;
        double v = uniform01();
        double r = std::sqrt(-2.0 * std::log(u));
        double a = 2.0 * std::numbers::pi * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Exact Poisson sampling. Knuth's product method for small means,
    // Hormann's PTRS transformed rejection for large ones.
    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) throw std::invalid_argument("poisson: mean must be positive");
        if (mean < 30.0) {
            double limit = std::exp(-mean);
            double prod = uniform01();
            std::uint64_t k = 0;
            while (prod > limit) {
                ++k;
                prod *= uniform01();
            }
            return k;
        }
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double lmu = std::log(mean);
        while (true) {
            double u = uniform01() - 0.5;
            double v = uniform01();
            double us = 0.5 - std::fabs(u);
            double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(k);
            if (k < 0.0 || (us < 0.013 && v > us)) continue;
            double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            double rhs = k * lmu - mean - std::lgamma(k + 1.0);
            if (lhs <= rhs) return static_cast<std::uint64_t>(k);
        }
    }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ctlearn
