#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mflab {

// Generator identity recorded in every experiment manifest. Reproducibility of
// stored rows is promised for a fixed id only.
inline constexpr std::string_view kRngId = "xoshiro256++/splitmix64";

inline constexpr std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes any number of 64-bit words into a stream seed. Used to derive disjoint
// per-purpose and per-replica streams from one base seed.
template <typename... Words>
constexpr std::uint64_t derive_seed(std::uint64_t base, Words... words) {
    std::uint64_t s = base;
    ((s = splitmix64_next(s) ^ (splitmix64_next(s) + static_cast<std::uint64_t>(words))), ...);
    return splitmix64_next(s);
}

// xoshiro256++ (Blackman/Vigna reference algorithm), state seeded via splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64_next(sm);
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

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Standard normal via Box-Muller. Consumes two uniforms per pair; the spare
    // value is cached so the draw pattern stays deterministic.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();  // log(0) guard, probability 2^-53
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void discard_spare() { have_spare_ = false; }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t s_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace mflab
