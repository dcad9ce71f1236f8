#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace recap {

// splitmix64 finalizer; used to derive well-separated seeds from (master, path).
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for a sub-stream identified by a path of indices.
/// Every replicate/cell derives its own seed so any unit of work can be
/// reproduced in isolation and run on any thread.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(master);
    for (std::uint64_t part : path)
        h = mix64(h ^ mix64(part));
    return h;
}

// Stream tags keep unrelated draws on unrelated sub-streams.
namespace stream {
constexpr std::uint64_t degrees   = 0x01;
constexpr std::uint64_t network   = 0x02;
constexpr std::uint64_t capture   = 0x03;
constexpr std::uint64_t recapture = 0x04;
constexpr std::uint64_t strata    = 0x05;
constexpr std::uint64_t bootstrap = 0x06;
constexpr std::uint64_t rds       = 0x07;
constexpr std::uint64_t repair    = 0x08;
} // namespace stream

/// mt19937_64 with hand-rolled draws. The engine's output sequence is fixed
/// by the standard and the draw algorithms below are ours, so results are
/// reproducible across standard libraries, not just across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Unbiased draw from {0, ..., n-1}.
    std::uint64_t below(std::uint64_t n) {
        // rejection of the first 2^64 mod n values
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold)
                return x % n;
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double unit_pos() { return 1.0 - unit(); }

    bool bernoulli(double p) { return unit() < p; }

    double normal(double mean, double sd) {
        // Box-Muller; the sine branch is discarded
        const double u1 = unit_pos();
        const double u2 = unit();
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double exponential() { return -std::log(unit_pos()); }

    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i)
            std::swap(values[i - 1], values[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace recap
