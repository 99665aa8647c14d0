#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace memoqcd {

/// One step of the splitmix64 sequence. Used for seed derivation only;
/// bulk random numbers come from Rng below.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derive an independent stream seed from a base seed and a stream index.
/// Distinct (base, stream) pairs give uncorrelated generators, so the same
/// base seed can drive pair sampling, population init, and evolution without
/// the streams interfering.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0xD1B54A32D192ED03ULL * (stream + 1));
    std::uint64_t a = splitmix64_next(s);
    std::uint64_t b = splitmix64_next(s);
    return a ^ (b << 1);
}

/// Deterministic, platform-independent random source.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard)
/// and converts to doubles with explicit bit arithmetic, so every platform
/// with IEEE-754 doubles produces identical streams for identical seeds.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). n must be positive and small relative to
    /// 2^53; the floor construction keeps the stream layout identical on
    /// every platform.
    int index(int n) {
        return static_cast<int>(uniform() * static_cast<double>(n));
    }

    /// Standard normal via Box-Muller. Generates pairs; the second value is
    /// cached so consecutive calls consume two uniforms per two normals.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // 1 - uniform() lies in (0, 1], keeping the log argument nonzero.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace memoqcd
