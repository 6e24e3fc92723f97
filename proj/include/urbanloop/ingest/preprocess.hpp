#pragma once

#include "urbanloop/ingest/dataset.hpp"

#include <set>
#include <string>
#include <vector>

namespace urbanloop {

using CategorySet = std::set<std::string, std::less<>>;

/// Familiar places, transport modes and unknown venues removed before
/// simulation (16 labels).
const CategorySet& default_excluded_categories();

/// Removes every event whose venue category is excluded, then drops venues and
/// users left without events. An empty exclusion set returns the input as is.
Dataset preprocess(const Dataset& data, const CategorySet& excluded = default_excluded_categories());

/// Offsets in days from the dataset's first event.
struct SplitSpec
{
    double t_train_days = 210.0;
    double t_max_days = 304.0;

    /// Throws std::invalid_argument unless 0 < t_train < t_max.
    void validate() const;
};

struct Split
{
    Dataset train;
    Dataset post;
};

/// train: t <= start + t_train; post: start + t_train < t <= start + t_max.
/// Later events are dropped. Both partitions share the input's tables.
Split split(const Dataset& data, const SplitSpec& spec);

} // namespace urbanloop
