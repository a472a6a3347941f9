#pragma once

// Counter-based random numbers.
//
// Every random draw in the library is a pure function of a 64-bit key and a
// 64-bit counter:
//
//     draw(key, n) = mix64(key + (n + 1) * kGolden)
//
// where mix64 is the SplitMix64 finalizer. This is the SplitMix64 sequence
// started at `key`, so a stream is reproducible on any platform. Independent
// streams are keyed with derive_key(seed, tag, index): `tag` names the
// consumer ("forest", "kfold", ...) and `index` is a stable position such as
// a tree number. Keys never depend on thread scheduling.

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace bitcascade {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    return mix64(mix64(seed ^ fnv1a(tag)) + (index + 1) * kGolden);
}

class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}
    CounterRng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0)
        : key_(derive_key(seed, tag, index)) {}

    std::uint64_t next() { return mix64(key_ + (++counter_) * kGolden); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n > 0. Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform integer in [lo, hi] (inclusive).
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (one value per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    double lognormal(double log_mean, double log_sd) { return std::exp(normal(log_mean, log_sd)); }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace bitcascade
