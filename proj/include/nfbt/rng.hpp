#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace nfbt {

// Splittable counter-based generator. A stream is keyed by an arbitrary
// chain of 64-bit salts (seed, trial index, method id, ...); derived
// streams are statistically independent and reproducible on any platform.
// Draw order within a stream is part of the reproducibility contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGolden)) {}

    // Child stream keyed by (this stream, salt). Does not advance *this.
    [[nodiscard]] Rng derive(std::uint64_t salt) const {
        Rng child(0);
        child.state_ = mix(state_ ^ mix(salt + kGolden));
        child.have_spare_ = false;
        return child;
    }
    [[nodiscard]] Rng derive(std::uint64_t a, std::uint64_t b) const {
        return derive(a).derive(b);
    }
    [[nodiscard]] Rng derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        return derive(a).derive(b).derive(c);
    }

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix(state_);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; second variate cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Circularly-symmetric complex normal CN(0, var).
    std::complex<double> cnormal(double var = 1.0) {
        double s = std::sqrt(var * 0.5);
        double re = s * normal();
        double im = s * normal();
        return {re, im};
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    // SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Fixed salts for the harness stream layout; kept in one place so the
// (seed, trial, method, purpose) keying is auditable.
namespace stream {
inline constexpr std::uint64_t kScenario = 0x5C31;
inline constexpr std::uint64_t kNoise = 0x401E;
inline constexpr std::uint64_t kMasks = 0x3A5C;
}  // namespace stream

}  // namespace nfbt
