#pragma once

#include "urbanloop/common/time.hpp"
#include "urbanloop/ingest/catalog.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urbanloop {

using UserIndex = std::uint32_t;

/// Sorted set of user ids; ascending UserIndex is ascending user id.
class UserTable
{
public:
    UserTable() = default;
    explicit UserTable(std::vector<std::string> ids);

    std::size_t size() const { return ids_.size(); }
    const std::string& id(UserIndex u) const { return ids_[u]; }
    const std::vector<std::string>& ids() const { return ids_; }
    std::optional<UserIndex> find(std::string_view id) const;

private:
    std::vector<std::string> ids_;
    std::map<std::string, UserIndex, std::less<>> by_id_;
};

struct VisitEvent
{
    UserIndex user = 0;
    VenueIndex venue = 0;
    Timestamp time = 0;
    /// Local-time offset from the source row; metadata only.
    std::int16_t tz_offset_minutes = 0;

    friend bool operator==(const VisitEvent&, const VisitEvent&) = default;
};

/// Chronologically sorted visits plus the catalog and user set they index.
/// Catalog and user table are shared between datasets derived from one
/// another (splits, subsamples), so indices stay comparable across them.
class Dataset
{
public:
    Dataset();

    /// Throws std::invalid_argument if events are unsorted or reference
    /// users/venues outside the tables.
    Dataset(std::shared_ptr<const Catalog> catalog, std::shared_ptr<const UserTable> users,
            std::vector<VisitEvent> events);

    const Catalog& catalog() const { return *catalog_; }
    const std::shared_ptr<const Catalog>& catalog_ptr() const { return catalog_; }
    const UserTable& users() const { return *users_; }
    const std::shared_ptr<const UserTable>& users_ptr() const { return users_; }

    std::span<const VisitEvent> events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    /// Distinct users with at least one event, ascending.
    std::vector<UserIndex> active_users() const;
    /// Distinct venues with at least one event, ascending.
    std::vector<VenueIndex> active_venues() const;

    /// Same tables, different events (must be sorted).
    Dataset with_events(std::vector<VisitEvent> events) const;

    /// Drops venues and users without events and reindexes.
    Dataset compacted() const;

    const std::string& user_id(const VisitEvent& e) const { return users_->id(e.user); }
    const Venue& venue_of(const VisitEvent& e) const { return catalog_->venue(e.venue); }

    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    std::shared_ptr<const Catalog> catalog_;
    std::shared_ptr<const UserTable> users_;
    std::vector<VisitEvent> events_;
};

} // namespace urbanloop
