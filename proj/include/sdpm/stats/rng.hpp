// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "sdpm/error.hpp"

namespace sdpm {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// xoshiro256** engine. Seeding costs four splitmix64 steps, so a fresh
/// engine per (iteration, observation) substream is affordable.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 0) noexcept {
        std::uint64_t x = seed;
        for (auto& w : s_) w = detail::splitmix64(x);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

private:
    std::uint64_t s_[4]{};
};

/// Deterministic random stream keyed by (seed, iteration, unit). Identical
/// keys always reproduce the same draw sequence; distinct keys give
/// statistically independent streams. A stream must not be shared between
/// threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t iteration = 0, std::uint64_t unit = 0)
        : seed_(seed), iteration_(iteration), unit_(unit), engine_(mix(seed, iteration, unit)) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t iteration() const noexcept { return iteration_; }
    std::uint64_t unit() const noexcept { return unit_; }

    Xoshiro256& engine() noexcept { return engine_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    /// Gamma with shape/rate parametrization.
    double gamma(double shape, double rate) {
        if (!(shape > 0.0) || !(rate > 0.0)) throw ArgumentError("gamma: shape and rate must be positive");
        return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
    }

    double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof, 1.0); }

    double beta(double a, double b) {
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        if (x + y == 0.0) return uniform() < a / (a + b) ? 1.0 : 0.0;
        return x / (x + y);
    }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t iteration, std::uint64_t unit) noexcept {
        std::uint64_t x = seed;
        std::uint64_t h = detail::splitmix64(x);
        x = h ^ (iteration * 0xd1b54a32d192ed03ULL);
        h = detail::splitmix64(x);
        x = h ^ (unit * 0xaef17502108ef2d9ULL);
        return detail::splitmix64(x);
    }

    std::uint64_t seed_;
    std::uint64_t iteration_;
    std::uint64_t unit_;
    Xoshiro256 engine_;
};

}  // namespace sdpm
