#pragma once

#include <cmath>
#include <cstdint>

namespace sgest {

// Deterministic, platform-independent random streams. The standard
// <random> distributions are not bit-reproducible across library
// implementations, so the generator and the transforms are spelled out
// here. Reproducibility of run artifacts depends on this file alone.

/// splitmix64 step; used both as a stream seeder and as a hash for
/// deriving child seeds (sweep cells, per-channel substreams).
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive combine of a seed with a sequence of labels,
/// e.g. derive_seed(master, {multiplier_index, replica_index}).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0x5be0cd19137e2179ULL) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h = splitmix64(s);
    s ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return splitmix64(s);
}

/// xoshiro256++ stream with seeding via splitmix64.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 1) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [-half_width, half_width].
    double uniform_sym(double half_width) {
        return (2.0 * uniform01() - 1.0) * half_width;
    }

    /// Standard normal draw, Box-Muller (one value per pair of uniforms;
    /// the spare is intentionally discarded to keep the stream position
    /// a simple function of the draw count).
    double gaussian() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Zero-mean Laplacian draw with scale b (variance 2 b^2), inverse CDF.
    double laplacian(double b) {
        const double u = uniform01() - 0.5;
        const double a = 1.0 - 2.0 * std::abs(u);
        return -b * (u < 0.0 ? -1.0 : 1.0) * std::log(a < 1e-300 ? 1e-300 : a);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4]{};
};

} // namespace sgest
