#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace urbanloop {

/// Seeded random stream used everywhere a draw is needed.
///
/// Wraps std::mt19937_64 (whose output sequence is fixed by the standard) and
/// implements the derived draws here instead of using the std distributions,
/// whose algorithms are implementation-defined. The same seed therefore yields
/// the same draws on every toolchain.
class RandomStream
{
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::size_t index(std::size_t n);

    /// True with probability p (p <= 0 never, p >= 1 always).
    bool bernoulli(double p) { return uniform() < p; }

    /// Index drawn with probability proportional to weights[i].
    /// Weights must be non-negative with a positive sum.
    std::size_t weighted(std::span<const double> weights);

    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Stable 64-bit FNV-1a hash.
std::uint64_t fnv1a(std::string_view text);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named substream of a master seed. Depends only on the inputs,
/// never on scheduling or call order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

} // namespace urbanloop
