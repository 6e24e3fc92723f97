#include "urbanloop/ingest/dataset.hpp"

#include <algorithm>
#include <stdexcept>

namespace urbanloop {

UserTable::UserTable(std::vector<std::string> ids) : ids_(std::move(ids))
{
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    for (std::size_t i = 0; i < ids_.size(); ++i)
        by_id_.emplace(ids_[i], static_cast<UserIndex>(i));
}

std::optional<UserIndex> UserTable::find(std::string_view id) const
{
    auto it = by_id_.find(id);
    if (it == by_id_.end())
        return std::nullopt;
    return it->second;
}

Dataset::Dataset()
    : catalog_(std::make_shared<const Catalog>()), users_(std::make_shared<const UserTable>())
{
}

Dataset::Dataset(std::shared_ptr<const Catalog> catalog, std::shared_ptr<const UserTable> users,
                 std::vector<VisitEvent> events)
    : catalog_(std::move(catalog)), users_(std::move(users)), events_(std::move(events))
{
    if (!catalog_ || !users_)
        throw std::invalid_argument("Dataset: null catalog or user table");
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const VisitEvent& e = events_[i];
        if (e.venue >= catalog_->size())
            throw std::invalid_argument("Dataset: event references unknown venue");
        if (e.user >= users_->size())
            throw std::invalid_argument("Dataset: event references unknown user");
        if (i > 0 && events_[i - 1].time > e.time)
            throw std::invalid_argument("Dataset: events are not sorted by timestamp");
    }
}

std::vector<UserIndex> Dataset::active_users() const
{
    std::vector<char> seen(users_->size(), 0);
    for (const auto& e : events_)
        seen[e.user] = 1;
    std::vector<UserIndex> out;
    for (std::size_t u = 0; u < seen.size(); ++u)
        if (seen[u])
            out.push_back(static_cast<UserIndex>(u));
    return out;
}

std::vector<VenueIndex> Dataset::active_venues() const
{
    std::vector<char> seen(catalog_->size(), 0);
    for (const auto& e : events_)
        seen[e.venue] = 1;
    std::vector<VenueIndex> out;
    for (std::size_t v = 0; v < seen.size(); ++v)
        if (seen[v])
            out.push_back(static_cast<VenueIndex>(v));
    return out;
}

Dataset Dataset::with_events(std::vector<VisitEvent> events) const
{
    return Dataset(catalog_, users_, std::move(events));
}

Dataset Dataset::compacted() const
{
    const auto venues = active_venues();
    const auto users = active_users();

    std::vector<Venue> kept_venues;
    kept_venues.reserve(venues.size());
    for (VenueIndex v : venues)
        kept_venues.push_back(catalog_->venue(v));
    std::vector<std::string> kept_users;
    kept_users.reserve(users.size());
    for (UserIndex u : users)
        kept_users.push_back(users_->id(u));

    // Both tables are sorted by id, so the surviving entries keep their
    // relative order and the remap is monotone.
    std::vector<VenueIndex> venue_map(catalog_->size(), 0);
    for (std::size_t i = 0; i < venues.size(); ++i)
        venue_map[venues[i]] = static_cast<VenueIndex>(i);
    std::vector<UserIndex> user_map(users_->size(), 0);
    for (std::size_t i = 0; i < users.size(); ++i)
        user_map[users[i]] = static_cast<UserIndex>(i);

    std::vector<VisitEvent> events = events_;
    for (auto& e : events) {
        e.venue = venue_map[e.venue];
        e.user = user_map[e.user];
    }
    return Dataset(std::make_shared<const Catalog>(std::move(kept_venues)),
                   std::make_shared<const UserTable>(std::move(kept_users)), std::move(events));
}

bool operator==(const Dataset& a, const Dataset& b)
{
    return a.catalog_->venues() == b.catalog_->venues() && a.users_->ids() == b.users_->ids() &&
           a.events_ == b.events_;
}

} // namespace urbanloop
