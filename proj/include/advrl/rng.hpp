#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace advrl {

// Independent random streams derived from one seed.
enum class Stream : std::uint64_t { environment = 1, learner = 2, schedule = 3, generator = 4 };

/**
 * Counter-based generator: the n-th output of stream k under seed s is
 * splitmix64(key(s, k) + n * golden_gamma). Outputs depend only on
 * (seed, stream, counter), so streams never interfere and sequences are
 * identical on every platform. Distributions are implemented here rather
 * than taken from <random>, whose algorithms vary between standard
 * libraries.
 */
class CounterRng {
public:
    static constexpr std::string_view kAlgorithm = "splitmix64-counter";

    CounterRng(std::uint64_t seed, Stream stream)
        : key_(mix(seed ^ mix(static_cast<std::uint64_t>(stream) * kGamma))) {}

    std::uint64_t next() { return mix(key_ + (++counter_) * kGamma); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Exp(1) variate.
    double exponential() { return -std::log1p(-uniform()); }

    /// Index drawn from non-negative weights (need not be normalized).
    template <typename Derived>
    int discrete(const Eigen::MatrixBase<Derived>& weights) {
        const double total = weights.sum();
        const double u = uniform() * total;
        double cumulative = 0.0;
        int last_positive = 0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            if (weights(i) <= 0.0) continue;
            last_positive = static_cast<int>(i);
            cumulative += weights(i);
            if (u < cumulative) return static_cast<int>(i);
        }
        return last_positive;
    }

    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace advrl
