#include "urbanloop/recsys/evaluate.hpp"

#include <stdexcept>

namespace urbanloop::recsys {

std::size_t rank_of(std::span<const VenueIndex> candidates, std::span<const double> raw,
                    VenueIndex target)
{
    std::size_t at = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i] == target)
            at = i;
    if (at == candidates.size())
        throw std::invalid_argument("rank_of: target is not a candidate");

    std::size_t rank = 1;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (raw[i] > raw[at] || (raw[i] == raw[at] && candidates[i] < target))
            ++rank;
    return rank;
}

EvaluationResult evaluate(const Model& model, std::span<const VisitEvent> visits,
                          const Catalog& catalog, std::size_t k)
{
    if (k == 0)
        throw std::invalid_argument("evaluate: k must be at least 1");
    EvaluationResult result;
    std::vector<double> raw;
    double hits = 0.0;
    double reciprocal = 0.0;
    for (const VisitEvent& e : visits) {
        if (!model.knows(e.user)) {
            ++result.skipped;
            continue;
        }
        const auto candidates = catalog.venues_in_category(catalog.category_of(e.venue));
        raw.resize(candidates.size());
        model.scorer().score(e.user, candidates, ScoringContext{std::nullopt, e.time},
                             raw);
        const std::size_t rank = rank_of(candidates, raw, e.venue);
        if (rank <= k) {
            hits += 1.0;
            reciprocal += 1.0 / static_cast<double>(rank);
        }
        ++result.evaluated;
    }
    if (result.evaluated > 0) {
        result.hit_rate = hits / static_cast<double>(result.evaluated);
        result.mrr = reciprocal / static_cast<double>(result.evaluated);
    }
    return result;
}

} // namespace urbanloop::recsys
