#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace pfl {

// xoshiro256++ seeded through splitmix64. All randomness in the simulator
// flows through streams derived from (run seed, client, round, purpose) so
// results do not depend on evaluation order.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
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

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // unbiased enough for simulation use (Lemire multiply-shift)
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Marsaglia-Tsang; shape > 0
    double gamma(double shape) {
        if (shape < 1.0) {
            const double boost = std::pow(uniform_positive(), 1.0 / shape);
            return gamma(shape + 1.0) * boost;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = uniform_positive();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
                return d * v;
            }
        }
    }

    std::vector<double> dirichlet(double alpha, std::size_t n) {
        std::vector<double> draws(n);
        double total = 0.0;
        for (auto& g : draws) {
            g = gamma(alpha);
            total += g;
        }
        for (auto& g : draws) g /= total;
        return draws;
    }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    double uniform_positive() {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return u;
    }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stream derivation: mixes the labels so nearby (client, round, purpose)
// tuples land in unrelated parts of the sequence space.
inline Rng derive_stream(std::uint64_t run_seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
    std::uint64_t sm = run_seed;
    std::uint64_t h = splitmix64(sm);
    sm = h ^ (a + 0x9e3779b97f4a7c15ull);
    h = splitmix64(sm);
    sm = h ^ (b + 0xd1b54a32d192ed03ull);
    h = splitmix64(sm);
    sm = h ^ (c + 0x8cb92ba72f3d8dd7ull);
    return Rng(splitmix64(sm));
}

// Labels for derived streams; values are part of the reproducibility contract.
enum class StreamPurpose : std::uint64_t {
    init_params = 1,
    batch = 2,
    prune_mask = 3,
    sparse_mask = 4,
    channel = 5,
    partition = 6,
    dataset = 7,
    probe = 8,
    holdout = 9,
};

inline Rng derive_stream(std::uint64_t run_seed, StreamPurpose purpose,
                         std::uint64_t a = 0, std::uint64_t b = 0) {
    return derive_stream(run_seed, static_cast<std::uint64_t>(purpose), a, b);
}

}  // namespace pfl
