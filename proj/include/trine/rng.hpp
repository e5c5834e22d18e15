#pragma once

#include <cmath>
#include <cstdint>

namespace trine {

// SplitMix64 stream. Chosen over std::mt19937_64 because the output sequence
// is fixed by this header alone, so identical seeds give identical trajectories
// on every platform and standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // Finalizer of SplitMix64; also used to derive decorrelated substreams.
    static std::uint64_t mix64(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Independent stream for (seed, stream_id); nearby ids do not collide.
    static Rng substream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(mix64(seed ^ (0xD1B54A32D192ED03ULL * (stream_id + 1))));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; strictly positive so it is safe under log().
    double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the paired draw is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double t = 6.283185307179586476925286766559 * uniform();
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Zero-mean Laplace with unit variance (scale 1/sqrt(2)).
    double laplace() {
        // uniform_pos() <= 1 would put 1 - 2|u| at zero; keep u in (-1/2, 1/2).
        double v = uniform();
        while (v == 0.0) v = uniform();
        const double u = v - 0.5;
        const double b = 0.70710678118654752440;
        return (u < 0 ? b : -b) * std::log1p(-2.0 * std::abs(u));
    }

    // Fair +/-1.
    double rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace trine
