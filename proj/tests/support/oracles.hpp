#pragma once

// Independent reference implementations used to check the library.

#include "urbanloop/common/random.hpp"
#include "urbanloop/metrics/metrics.hpp"

#include <vector>

namespace urbanloop::testing {

/// Non-negative vector with a positive sum; mixes integers, reals and zeros.
std::vector<double> random_counts(RandomStream& rng, std::size_t n);

/// sum_i sum_j |x_i - x_j| / (2 n sum x)
double gini_mad(const std::vector<double>& x);

struct VisitSample
{
    std::vector<VisitEvent> visits;
    std::vector<std::size_t> epochs;
    /// Window e holds exactly the visits labelled e.
    std::vector<std::pair<Timestamp, Timestamp>> windows;
};

/// Up to max_events visits over few users and venues, so that collisions are
/// common, spread over 1..max_epochs epochs.
VisitSample random_visit_set(RandomStream& rng, std::size_t max_events, std::size_t max_epochs);

/// All-pairs construction of the co-location network.
metrics::ColocationNetwork colocation_brute(const std::vector<VisitEvent>& visits,
                                            const std::vector<std::size_t>& epochs);

} // namespace urbanloop::testing
