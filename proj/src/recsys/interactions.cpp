#include "urbanloop/recsys/interactions.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace urbanloop::recsys {

std::span<const VenueIndex> InteractionMatrix::row(UserIndex u) const
{
    if (u >= user_space_)
        return {};
    return {row_entries_.data() + row_offsets_[u], row_offsets_[u + 1] - row_offsets_[u]};
}

std::span<const UserIndex> InteractionMatrix::column(VenueIndex v) const
{
    if (v >= venue_space_)
        return {};
    return {col_entries_.data() + col_offsets_[v], col_offsets_[v + 1] - col_offsets_[v]};
}

bool InteractionMatrix::contains(UserIndex u, VenueIndex v) const
{
    auto r = row(u);
    return std::binary_search(r.begin(), r.end(), v);
}

InteractionMatrix build_interactions(std::span<const VisitEvent> base,
                                     std::span<const VisitEvent> extra, std::size_t user_space,
                                     std::size_t venue_space)
{
    InteractionMatrix m;
    m.user_space_ = user_space;
    m.venue_space_ = venue_space;

    std::vector<char> user_seen(user_space, 0);
    std::vector<char> venue_seen(venue_space, 0);
    std::vector<std::pair<UserIndex, VenueIndex>> pairs;
    pairs.reserve(base.size() + extra.size());
    for (auto events : {base, extra}) {
        for (const VisitEvent& e : events) {
            if (e.user >= user_space || e.venue >= venue_space)
                throw std::out_of_range("interaction outside the index space");
            if (!user_seen[e.user]) {
                user_seen[e.user] = 1;
                m.users_.push_back(e.user);
            }
            if (!venue_seen[e.venue]) {
                venue_seen[e.venue] = 1;
                m.venues_.push_back(e.venue);
            }
            pairs.emplace_back(e.user, e.venue);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    m.row_offsets_.assign(user_space + 1, 0);
    m.col_offsets_.assign(venue_space + 1, 0);
    for (const auto& [u, v] : pairs) {
        ++m.row_offsets_[u + 1];
        ++m.col_offsets_[v + 1];
    }
    for (std::size_t i = 0; i < user_space; ++i)
        m.row_offsets_[i + 1] += m.row_offsets_[i];
    for (std::size_t i = 0; i < venue_space; ++i)
        m.col_offsets_[i + 1] += m.col_offsets_[i];

    // pairs are sorted by (u, v), so rows fill in ascending order; columns
    // receive users in ascending order for the same reason.
    m.row_entries_.resize(pairs.size());
    m.col_entries_.resize(pairs.size());
    std::vector<std::size_t> col_fill(m.col_offsets_.begin(), m.col_offsets_.end() - 1);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        m.row_entries_[i] = pairs[i].second;
        m.col_entries_[col_fill[pairs[i].second]++] = pairs[i].first;
    }
    return m;
}

} // namespace urbanloop::recsys
