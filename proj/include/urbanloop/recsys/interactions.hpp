#pragma once

#include "urbanloop/ingest/dataset.hpp"

#include <span>
#include <vector>

namespace urbanloop::recsys {

/// Binary user x venue matrix: entry (u, v) is 1 iff u visited v at least once.
///
/// Rows and columns live in the dataset's global index spaces so a model can
/// score any catalog venue; users() and venues() list the indices that carry
/// at least one entry, in first-appearance order.
class InteractionMatrix
{
public:
    InteractionMatrix() = default;

    std::size_t user_space() const { return user_space_; }
    std::size_t venue_space() const { return venue_space_; }
    const std::vector<UserIndex>& users() const { return users_; }
    const std::vector<VenueIndex>& venues() const { return venues_; }
    std::size_t nnz() const { return row_entries_.size(); }

    /// Venues of u, ascending.
    std::span<const VenueIndex> row(UserIndex u) const;
    /// Users of v, ascending.
    std::span<const UserIndex> column(VenueIndex v) const;
    bool contains(UserIndex u, VenueIndex v) const;

    friend InteractionMatrix build_interactions(std::span<const VisitEvent> base,
                                                std::span<const VisitEvent> extra,
                                                std::size_t user_space, std::size_t venue_space);

private:
    std::size_t user_space_ = 0;
    std::size_t venue_space_ = 0;
    std::vector<UserIndex> users_;
    std::vector<VenueIndex> venues_;
    std::vector<std::size_t> row_offsets_;
    std::vector<VenueIndex> row_entries_;
    std::vector<std::size_t> col_offsets_;
    std::vector<UserIndex> col_entries_;
};

/// Matrix over base followed by extra (either may be empty).
InteractionMatrix build_interactions(std::span<const VisitEvent> base,
                                     std::span<const VisitEvent> extra, std::size_t user_space,
                                     std::size_t venue_space);

inline InteractionMatrix build_interactions(std::span<const VisitEvent> events,
                                            std::size_t user_space, std::size_t venue_space)
{
    return build_interactions(events, {}, user_space, venue_space);
}

inline InteractionMatrix build_interactions(const Dataset& data)
{
    return build_interactions(data.events(), {}, data.users().size(), data.catalog().size());
}

} // namespace urbanloop::recsys
