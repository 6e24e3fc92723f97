#include "urbanloop/recsys/model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace urbanloop::recsys {

void PopularityScorer::score(UserIndex, std::span<const VenueIndex> candidates,
                             const ScoringContext&, std::span<double> out) const
{
    for (std::size_t i = 0; i < candidates.size(); ++i)
        out[i] = visitors(candidates[i]);
}

nlohmann::json PopularityScorer::to_json() const
{
    return {{"visitors", visitors_}};
}

Model::Model(std::shared_ptr<const Scorer> scorer,
             std::shared_ptr<const PopularityScorer> popularity, std::vector<char> known_users,
             TrainingReport report)
    : scorer_(std::move(scorer)),
      popularity_(std::move(popularity)),
      known_(std::move(known_users)),
      report_(std::move(report))
{
    if (!scorer_ || !popularity_)
        throw std::invalid_argument("Model: null scorer");
}

std::vector<double> min_max_normalize(std::span<const double> values)
{
    std::vector<double> out(values.size());
    if (values.empty())
        return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(values.size()));
        return out;
    }
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = (values[i] - *lo) / range;
    return out;
}

ScoredCandidates score(const Model& model, UserIndex user, std::span<const VenueIndex> candidates,
                       const ScoringContext& context)
{
    if (candidates.empty())
        throw std::invalid_argument("score: empty candidate set");
    ScoredCandidates result;
    result.venues.assign(candidates.begin(), candidates.end());
    result.raw.resize(candidates.size());
    if (model.knows(user)) {
        model.scorer().score(user, candidates, context, result.raw);
    } else {
        model.popularity().score(user, candidates, context, result.raw);
        result.used_fallback = true;
    }
    result.normalized = min_max_normalize(result.raw);
    return result;
}

VenueIndex choose(const ScoredCandidates& scored, std::size_t k, RandomStream& rng)
{
    if (scored.venues.empty())
        throw std::invalid_argument("choose: empty candidate set");
    if (k == 0)
        throw std::invalid_argument("choose: k must be at least 1");

    std::vector<std::size_t> order(scored.venues.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        if (scored.normalized[a] != scored.normalized[b])
            return scored.normalized[a] > scored.normalized[b];
        return scored.venues[a] < scored.venues[b];
    };
    const std::size_t keep = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      better);
    order.resize(keep);

    std::vector<double> weights(keep);
    double total = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
        weights[i] = scored.normalized[order[i]];
        total += weights[i];
    }
    const std::size_t pick = total > 0.0 ? rng.weighted(weights) : rng.index(keep);
    return scored.venues[order[pick]];
}

VenueIndex recommend(const Model& model, UserIndex user, std::span<const VenueIndex> candidates,
                     std::size_t k, RandomStream& rng, const ScoringContext& context)
{
    return choose(score(model, user, candidates, context), k, rng);
}

} // namespace urbanloop::recsys
