#include "urbanloop/common/random.hpp"

#include <limits>
#include <stdexcept>

namespace urbanloop {

std::size_t RandomStream::index(std::size_t n)
{
    if (n == 0)
        throw std::invalid_argument("RandomStream::index: empty range");
    const std::uint64_t range = n;
    // Reject the top partial block so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % range);
}

std::size_t RandomStream::weighted(std::span<const double> weights)
{
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0))
            throw std::invalid_argument("RandomStream::weighted: negative or NaN weight");
        total += w;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("RandomStream::weighted: weights sum to zero");

    const double target = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        acc += weights[i];
        last_positive = i;
        if (target < acc)
            return i;
    }
    // Rounding can leave target == total; the last positive weight owns it.
    return last_positive;
}

std::uint64_t fnv1a(std::string_view text)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index)
{
    return mix64(mix64(master) ^ mix64(fnv1a(label) + index));
}

} // namespace urbanloop
