#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace micns {

/// Seeded random source. All draws are derived from the raw mt19937_64 stream
/// with fixed arithmetic, so sequences are reproducible across platforms for a
/// given seed (std::*_distribution is implementation-defined and avoided).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; the spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Avoid log(0); the shift keeps u1 in (0, 1].
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.141592653589793238462643 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Uniform index in [0, n). n must be positive. Modulo bias is irrelevant
    /// at the scales used here and keeps the draw count deterministic.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    /// Fisher-Yates shuffle, one index draw per element.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace micns
