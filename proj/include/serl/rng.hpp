#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace serl {

// Deterministic random source. mt19937_64 is fully specified by the
// standard; all distributions are derived from raw 64-bit draws here
// instead of std::*_distribution, whose output is implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // [0, 1) with 53 bits of mantissa
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; caches the second variate
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // unbiased integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n);

    // Marsaglia-Tsang; supports any a > 0
    double gamma(double a);

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // splitmix64-based fold for deriving independent sub-streams
    static std::uint64_t fold(std::uint64_t seed, std::uint64_t tag);
    static std::uint64_t fold(std::uint64_t seed, std::uint64_t tag1, std::uint64_t tag2) {
        return fold(fold(seed, tag1), tag2);
    }
    static std::uint64_t fold(std::uint64_t seed, std::uint64_t t1, std::uint64_t t2,
                              std::uint64_t t3) {
        return fold(fold(seed, t1, t2), t3);
    }

  private:
    std::mt19937_64 gen_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace serl
