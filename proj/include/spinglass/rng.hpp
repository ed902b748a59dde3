// Deterministic random number generation. All randomness in this library
// flows through the generators defined here so that a 64-bit seed pins an
// experiment forever, independent of platform and standard library.
//
// Generator: xoshiro256++ (Blackman & Vigna), state seeded from the
// splitmix64 stream of the user seed. Uniform doubles take the top 53 bits
// of one output word; normals use the Box-Muller transform. None of this
// may change without invalidating every recorded seed.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace spinglass {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (Stafford mix13). Used for seed avalanche/derivation.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

// Replica r of a run seeded with `master` uses this child seed. Frozen:
// schedule independence of parallel sweeps depends on it.
inline constexpr std::uint64_t child_seed(std::uint64_t master, std::uint64_t r) noexcept {
    return mix64(master ^ (r * kGolden));
}

// Derive an independent stream for a named purpose (disorder vs data etc.).
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix64(mix64(seed ^ kGolden) ^ tag);
}

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) noexcept {
        // splitmix64 stream; guarantees a nonzero xoshiro state for any seed
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s += kGolden;
            word = mix64(s);
        }
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1]; safe as a log() argument
    double uniform01_pos() noexcept {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // uniform integer in [0, bound) by 128-bit multiply-shift
    std::uint64_t below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    // fair coin as a spin value
    int coin_pm1() noexcept { return (next() >> 63) ? 1 : -1; }

    const std::array<std::uint64_t, 4>& state() const noexcept { return state_; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
};

// Standard normals by Box-Muller; the sine partner of each pair is cached,
// so draws must be sequential (the class is not shareable across threads).
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) noexcept : rng_(seed) {}

    double next() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.uniform01_pos();
        const double u2 = rng_.uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    Xoshiro256pp& engine() noexcept { return rng_; }

private:
    Xoshiro256pp rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace spinglass
