#pragma once

#include "urbanloop/common/random.hpp"
#include "urbanloop/ingest/catalog.hpp"
#include "urbanloop/ingest/dataset.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace urbanloop::geo {

inline constexpr double earth_radius_km = 6371.0088;

/// Great-circle distance in km.
double haversine(const LatLon& a, const LatLon& b);

/// Uniform lat/lon grid over a catalog.
///
/// Cells are keyed sparsely so a catalog spanning the globe costs no more than
/// a city. Every query filters by exact haversine distance, so the grid only
/// narrows which venues get tested and results match a linear scan.
class SpatialIndex
{
public:
    /// cell_km is converted to degrees at the catalog's mean latitude.
    explicit SpatialIndex(std::shared_ptr<const Catalog> catalog, double cell_km = 1.0);

    const Catalog& catalog() const { return *catalog_; }
    double cell_km() const { return cell_km_; }

    /// Venues (any category) within r_km of center, ascending.
    std::vector<VenueIndex> within(const LatLon& center, double r_km) const;

    /// Venues of one category within r_km of center, ascending.
    std::vector<VenueIndex> within(const LatLon& center, double r_km, CategoryIndex category) const;

    /// Venues whose category belongs to the first-level group, ascending.
    std::vector<VenueIndex> within_group(const LatLon& center, double r_km, GroupIndex group) const;

    /// Number of venues within r_km of center, any category.
    std::size_t count_within(const LatLon& center, double r_km) const;

    /// Nearest venue of the category, ties by ascending index, optionally
    /// skipping one venue.
    std::optional<VenueIndex> nearest(const LatLon& center, CategoryIndex category,
                                      std::optional<VenueIndex> exclude = std::nullopt) const;

private:
    template <typename Visit>
    void for_each_candidate(const LatLon& center, double r_km, Visit&& visit) const;

    std::uint64_t key(std::int64_t row, std::int64_t col) const;

    std::shared_ptr<const Catalog> catalog_;
    double cell_km_;
    double cell_lat_deg_;
    double cell_lon_deg_;
    std::int64_t rows_;
    std::int64_t cols_;
    std::unordered_map<std::uint64_t, std::vector<VenueIndex>> cells_;
};

/// Venues within r of a catalog venue, optionally restricted to one category.
/// The center is included when it matches.
std::vector<VenueIndex> venues_within(const SpatialIndex& index, VenueIndex center, double r_km,
                                      std::optional<CategoryIndex> category = std::nullopt);

/// Number of other venues within r_star of v.
std::size_t relevance(const SpatialIndex& index, VenueIndex v, double r_star_km);

/// relevance() for every catalog venue.
std::vector<std::uint32_t> relevance_all(const SpatialIndex& index, double r_star_km);

/// Empirical distribution of consecutive-visit distances.
class JumpDistribution
{
public:
    JumpDistribution() = default;
    explicit JumpDistribution(std::vector<double> samples_km);

    std::span<const double> samples() const { return samples_; }
    bool empty() const { return samples_.empty(); }
    std::size_t size() const { return samples_.size(); }

    /// Lower of the two middle values for even counts. Throws DomainError if empty.
    double median() const;

    /// One stored sample, uniformly. Throws DomainError if empty.
    double sample(RandomStream& rng) const;

private:
    std::vector<double> samples_;
    double median_ = 0.0;
};

/// One sample per consecutive pair of a user's visits, in event order.
/// drop_zero_length skips pairs at the same venue.
JumpDistribution build_jump_distribution(const Dataset& data, bool drop_zero_length = false);

} // namespace urbanloop::geo
