#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "hant/error.hpp"

namespace hant {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seeded stream. Only the raw mt19937_64 output is used, so draws are
// identical on every standard library; the <random> distributions are not.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

    // Independent child stream keyed by a fixed label.
    Rng fork(std::string_view label) const { return Rng(splitmix64(seed_ ^ fnv1a(label))); }

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::size_t index(std::size_t n) {
        if (n == 0) throw Error("empty-range", "cannot draw an index from an empty range");
        auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    // Roulette-wheel draw proportional to nonnegative weights. Falls back to
    // a uniform draw when the total mass is zero.
    std::size_t pick_weighted(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) return index(weights.size());
        double r = uniform() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (r < weights[i]) return i;
            r -= weights[i];
        }
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0.0) return i;
        return weights.size() - 1;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace hant
