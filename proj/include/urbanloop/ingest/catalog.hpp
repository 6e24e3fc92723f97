#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urbanloop {

using VenueIndex = std::uint32_t;
using CategoryIndex = std::uint32_t;
using GroupIndex = std::uint32_t;

struct LatLon
{
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct Venue
{
    std::string id;
    std::string category;
    std::optional<std::string> first_level_category;
    LatLon position;

    friend bool operator==(const Venue&, const Venue&) = default;
};

bool valid_position(const LatLon& p);

/// Immutable venue catalog.
///
/// Venues are stored sorted by id, so ascending VenueIndex is ascending venue
/// id; every "ties by ascending venue id" rule in the library relies on this.
/// Categories and first-level groups are interned and likewise sorted by name.
class Catalog
{
public:
    Catalog() = default;

    /// Throws std::invalid_argument on duplicate ids, out-of-range
    /// coordinates, or a category mapped to two different first-level groups.
    explicit Catalog(std::vector<Venue> venues);

    std::size_t size() const { return venues_.size(); }
    bool empty() const { return venues_.empty(); }

    const Venue& venue(VenueIndex v) const { return venues_[v]; }
    const std::vector<Venue>& venues() const { return venues_; }
    const LatLon& position(VenueIndex v) const { return venues_[v].position; }
    std::optional<VenueIndex> find(std::string_view id) const;

    CategoryIndex category_of(VenueIndex v) const { return venue_category_[v]; }
    std::size_t category_count() const { return category_names_.size(); }
    const std::string& category_name(CategoryIndex c) const { return category_names_[c]; }
    std::optional<CategoryIndex> find_category(std::string_view name) const;
    std::span<const VenueIndex> venues_in_category(CategoryIndex c) const
    {
        return category_members_[c];
    }

    /// First-level group of a category, if the hierarchy assigns one.
    std::optional<GroupIndex> group_of(CategoryIndex c) const { return category_group_[c]; }
    std::size_t group_count() const { return group_names_.size(); }
    const std::string& group_name(GroupIndex g) const { return group_names_[g]; }
    std::span<const CategoryIndex> categories_in_group(GroupIndex g) const
    {
        return group_members_[g];
    }

private:
    std::vector<Venue> venues_;
    std::map<std::string, VenueIndex, std::less<>> by_id_;
    std::vector<CategoryIndex> venue_category_;
    std::vector<std::string> category_names_;
    std::map<std::string, CategoryIndex, std::less<>> category_by_name_;
    std::vector<std::vector<VenueIndex>> category_members_;
    std::vector<std::optional<GroupIndex>> category_group_;
    std::vector<std::string> group_names_;
    std::vector<std::vector<CategoryIndex>> group_members_;
};

} // namespace urbanloop
