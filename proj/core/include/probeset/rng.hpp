#pragma once

#include <cmath>
#include <cstdint>

namespace probeset {

// Counter-based splittable generator. Output k is finalize(key + k*gamma),
// the SplitMix64 construction, so the stream is a pure function of (key,
// counter) and child streams derived by split() never share outputs with the
// parent for distinct stream ids. Each worker owns its instance; there is no
// shared mutable state.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed) : key_(seed) {}

    std::uint64_t next_u64() { return finalize(key_ + (++counter_) * kGamma); }

    // Uniform on [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1); never returns 0 so logs are safe.
    double next_double_open() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    bool next_bernoulli(double p) { return next_double() < p; }

    double next_exponential(double rate = 1.0) { return -std::log(next_double_open()) / rate; }

    double next_gumbel() { return -std::log(-std::log(next_double_open())); }

    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller on open-interval uniforms.
        double u = next_double_open();
        double v = next_double_open();
        double r = std::sqrt(-2.0 * std::log(u));
        double theta = 2.0 * 3.14159265358979323846 * v;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Marsaglia-Tsang; shape < 1 handled by boosting and scaling back.
    double next_gamma(double shape) {
        if (shape < 1.0) {
            double u = next_double_open();
            return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = next_gaussian();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = next_double_open();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }

    // Deterministic child stream; independent of this instance's counter.
    SplitRng split(std::uint64_t stream) const {
        return SplitRng(finalize(finalize(key_ + kGamma) ^ finalize(stream * kGamma + 0x94D049BB133111EBull)));
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace probeset
