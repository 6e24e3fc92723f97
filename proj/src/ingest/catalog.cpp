#include "urbanloop/ingest/catalog.hpp"

#include <algorithm>
#include <stdexcept>

namespace urbanloop {

bool valid_position(const LatLon& p)
{
    return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

Catalog::Catalog(std::vector<Venue> venues) : venues_(std::move(venues))
{
    std::sort(venues_.begin(), venues_.end(),
              [](const Venue& a, const Venue& b) { return a.id < b.id; });

    std::map<std::string, std::optional<std::string>, std::less<>> parent_of;
    for (std::size_t i = 0; i < venues_.size(); ++i) {
        const Venue& v = venues_[i];
        if (!valid_position(v.position))
            throw std::invalid_argument("venue '" + v.id + "' has out-of-range coordinates");
        if (i > 0 && venues_[i - 1].id == v.id)
            throw std::invalid_argument("duplicate venue id '" + v.id + "'");
        by_id_.emplace(v.id, static_cast<VenueIndex>(i));

        auto [it, inserted] = parent_of.emplace(v.category, v.first_level_category);
        if (!inserted && it->second != v.first_level_category)
            throw std::invalid_argument("category '" + v.category +
                                        "' assigned to conflicting first-level groups");
    }

    // std::map iterates in name order, which fixes the interned order.
    std::map<std::string, GroupIndex, std::less<>> group_by_name;
    for (const auto& [category, parent] : parent_of)
        if (parent)
            group_by_name.emplace(*parent, 0);
    for (auto& [name, index] : group_by_name) {
        index = static_cast<GroupIndex>(group_names_.size());
        group_names_.push_back(name);
    }
    group_members_.resize(group_names_.size());

    for (const auto& [category, parent] : parent_of) {
        const auto c = static_cast<CategoryIndex>(category_names_.size());
        category_names_.push_back(category);
        category_by_name_.emplace(category, c);
        if (parent) {
            const GroupIndex g = group_by_name.find(*parent)->second;
            category_group_.push_back(g);
            group_members_[g].push_back(c);
        } else {
            category_group_.push_back(std::nullopt);
        }
    }

    category_members_.resize(category_names_.size());
    venue_category_.reserve(venues_.size());
    for (std::size_t i = 0; i < venues_.size(); ++i) {
        const CategoryIndex c = category_by_name_.find(venues_[i].category)->second;
        venue_category_.push_back(c);
        category_members_[c].push_back(static_cast<VenueIndex>(i));
    }
}

std::optional<VenueIndex> Catalog::find(std::string_view id) const
{
    auto it = by_id_.find(id);
    if (it == by_id_.end())
        return std::nullopt;
    return it->second;
}

std::optional<CategoryIndex> Catalog::find_category(std::string_view name) const
{
    auto it = category_by_name_.find(name);
    if (it == category_by_name_.end())
        return std::nullopt;
    return it->second;
}

} // namespace urbanloop
