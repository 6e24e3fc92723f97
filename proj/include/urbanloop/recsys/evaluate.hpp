#pragma once

#include "urbanloop/ingest/dataset.hpp"
#include "urbanloop/recsys/model.hpp"

#include <span>

namespace urbanloop::recsys {

struct EvaluationResult
{
    double hit_rate = 0.0;
    double mrr = 0.0;
    std::size_t evaluated = 0;
    /// Visits by users the model never saw in training.
    std::size_t skipped = 0;
};

/// 1-based rank of target among candidates by raw score, ties by ascending
/// venue index. target must be one of the candidates.
std::size_t rank_of(std::span<const VenueIndex> candidates, std::span<const double> raw,
                    VenueIndex target);

/// HitRate@k and mRR@k over held-out visits. Candidates for each visit are all
/// catalog venues sharing the true venue's category.
EvaluationResult evaluate(const Model& model, std::span<const VisitEvent> visits,
                          const Catalog& catalog, std::size_t k = 20);

} // namespace urbanloop::recsys
