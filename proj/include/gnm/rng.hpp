#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gnm {

/// mt19937_64 with hand-rolled output transforms. The engine's sequence is
/// pinned by the standard; std:: distributions are not, so we avoid them to
/// keep runs reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (no caching, one fresh pair per call).
    double normal() {
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Normal redrawn until it falls inside [lo, hi].
    double truncated_normal(double mean, double stddev, double lo, double hi) {
        double v;
        do {
            v = normal(mean, stddev);
        } while (v < lo || v > hi);
        return v;
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

}  // namespace gnm
