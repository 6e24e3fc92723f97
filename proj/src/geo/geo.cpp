#include "urbanloop/geo/geo.hpp"

#include "urbanloop/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace urbanloop::geo {

namespace {

constexpr double deg_to_rad = std::numbers::pi / 180.0;
constexpr double km_per_degree = earth_radius_km * deg_to_rad;
// Slack on box edges so float rounding never excludes a boundary venue.
constexpr double margin_deg = 1e-7;

struct LonRange
{
    double lo;
    double hi;
};

} // namespace

double haversine(const LatLon& a, const LatLon& b)
{
    const double phi1 = a.lat * deg_to_rad;
    const double phi2 = b.lat * deg_to_rad;
    const double dphi = (b.lat - a.lat) * deg_to_rad;
    const double dlambda = (b.lon - a.lon) * deg_to_rad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * earth_radius_km * std::asin(std::sqrt(h));
}

SpatialIndex::SpatialIndex(std::shared_ptr<const Catalog> catalog, double cell_km)
    : catalog_(std::move(catalog)), cell_km_(cell_km)
{
    if (!catalog_)
        throw std::invalid_argument("SpatialIndex: null catalog");
    if (!(cell_km_ > 0.0))
        throw std::invalid_argument("SpatialIndex: cell size must be positive");

    double mean_lat = 0.0;
    for (const Venue& v : catalog_->venues())
        mean_lat += v.position.lat;
    if (!catalog_->empty())
        mean_lat /= static_cast<double>(catalog_->size());
    const double cos_lat = std::max(std::cos(mean_lat * deg_to_rad), 0.01);

    cell_lat_deg_ = std::min(cell_km_ / km_per_degree, 180.0);
    cell_lon_deg_ = std::min(cell_km_ / (km_per_degree * cos_lat), 360.0);
    rows_ = static_cast<std::int64_t>(std::ceil(180.0 / cell_lat_deg_));
    cols_ = static_cast<std::int64_t>(std::ceil(360.0 / cell_lon_deg_));

    for (std::size_t i = 0; i < catalog_->size(); ++i) {
        const LatLon& p = catalog_->position(static_cast<VenueIndex>(i));
        const auto row = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::floor((p.lat + 90.0) / cell_lat_deg_)), 0, rows_ - 1);
        const auto col = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::floor((p.lon + 180.0) / cell_lon_deg_)), 0, cols_ - 1);
        cells_[key(row, col)].push_back(static_cast<VenueIndex>(i));
    }
}

std::uint64_t SpatialIndex::key(std::int64_t row, std::int64_t col) const
{
    return static_cast<std::uint64_t>(row) * static_cast<std::uint64_t>(cols_) +
           static_cast<std::uint64_t>(col);
}

template <typename Visit>
void SpatialIndex::for_each_candidate(const LatLon& center, double r_km, Visit&& visit) const
{
    const double angle = r_km / earth_radius_km;
    const double dlat = angle / deg_to_rad + margin_deg;
    const double lat_lo = center.lat - dlat;
    const double lat_hi = center.lat + dlat;

    bool all_lons = angle >= std::numbers::pi || lat_lo <= -90.0 || lat_hi >= 90.0;
    double dlon = 360.0;
    if (!all_lons) {
        // hav(d) >= cos^2(phi_max) * hav(dlambda) for both endpoints in the band.
        const double phi_max = std::max(std::abs(lat_lo), std::abs(lat_hi)) * deg_to_rad;
        const double bound = std::sin(angle / 2.0) / std::cos(phi_max);
        if (bound >= 1.0)
            all_lons = true;
        else
            dlon = 2.0 * std::asin(bound) / deg_to_rad + margin_deg;
    }

    std::vector<LonRange> lon_ranges;
    if (all_lons || dlon >= 180.0) {
        lon_ranges.push_back({-180.0, 180.0});
    } else {
        const double lo = center.lon - dlon;
        const double hi = center.lon + dlon;
        if (lo < -180.0) {
            lon_ranges.push_back({lo + 360.0, 180.0});
            lon_ranges.push_back({-180.0, hi});
        } else if (hi > 180.0) {
            lon_ranges.push_back({lo, 180.0});
            lon_ranges.push_back({-180.0, hi - 360.0});
        } else {
            lon_ranges.push_back({lo, hi});
        }
    }

    auto row_of = [&](double lat) {
        return std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::floor((lat + 90.0) / cell_lat_deg_)), 0, rows_ - 1);
    };
    auto col_of = [&](double lon) {
        return std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::floor((lon + 180.0) / cell_lon_deg_)), 0, cols_ - 1);
    };
    const std::int64_t row_lo = row_of(std::max(lat_lo, -90.0));
    const std::int64_t row_hi = row_of(std::min(lat_hi, 90.0));

    std::uint64_t box_cells = 0;
    for (const LonRange& range : lon_ranges)
        box_cells += static_cast<std::uint64_t>(row_hi - row_lo + 1) *
                     static_cast<std::uint64_t>(col_of(range.hi) - col_of(range.lo) + 1);

    if (box_cells > cells_.size()) {
        // Large query: walking the occupied cells is cheaper than the box.
        for (const auto& [k, members] : cells_)
            for (VenueIndex v : members)
                visit(v);
        return;
    }
    for (std::int64_t row = row_lo; row <= row_hi; ++row)
        for (const LonRange& range : lon_ranges)
            for (std::int64_t col = col_of(range.lo); col <= col_of(range.hi); ++col) {
                auto it = cells_.find(key(row, col));
                if (it == cells_.end())
                    continue;
                for (VenueIndex v : it->second)
                    visit(v);
            }
}

std::vector<VenueIndex> SpatialIndex::within(const LatLon& center, double r_km) const
{
    if (!(r_km >= 0.0))
        throw std::invalid_argument("radius must be non-negative");
    std::vector<VenueIndex> out;
    for_each_candidate(center, r_km, [&](VenueIndex v) {
        if (haversine(center, catalog_->position(v)) <= r_km)
            out.push_back(v);
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<VenueIndex> SpatialIndex::within(const LatLon& center, double r_km,
                                             CategoryIndex category) const
{
    if (!(r_km >= 0.0))
        throw std::invalid_argument("radius must be non-negative");
    // A category is a few hundred venues at most; scanning it beats the grid.
    std::vector<VenueIndex> out;
    for (VenueIndex v : catalog_->venues_in_category(category))
        if (haversine(center, catalog_->position(v)) <= r_km)
            out.push_back(v);
    return out;
}

std::vector<VenueIndex> SpatialIndex::within_group(const LatLon& center, double r_km,
                                                   GroupIndex group) const
{
    std::vector<VenueIndex> out;
    for (CategoryIndex c : catalog_->categories_in_group(group)) {
        auto part = within(center, r_km, c);
        out.insert(out.end(), part.begin(), part.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t SpatialIndex::count_within(const LatLon& center, double r_km) const
{
    if (!(r_km >= 0.0))
        throw std::invalid_argument("radius must be non-negative");
    std::size_t n = 0;
    for_each_candidate(center, r_km, [&](VenueIndex v) {
        if (haversine(center, catalog_->position(v)) <= r_km)
            ++n;
    });
    return n;
}

std::optional<VenueIndex> SpatialIndex::nearest(const LatLon& center, CategoryIndex category,
                                                std::optional<VenueIndex> exclude) const
{
    std::optional<VenueIndex> best;
    double best_d = 0.0;
    // Members are ascending, so strict < keeps the lowest index on ties.
    for (VenueIndex v : catalog_->venues_in_category(category)) {
        if (exclude && v == *exclude)
            continue;
        const double d = haversine(center, catalog_->position(v));
        if (!best || d < best_d) {
            best = v;
            best_d = d;
        }
    }
    return best;
}

std::vector<VenueIndex> venues_within(const SpatialIndex& index, VenueIndex center, double r_km,
                                      std::optional<CategoryIndex> category)
{
    const LatLon& p = index.catalog().position(center);
    return category ? index.within(p, r_km, *category) : index.within(p, r_km);
}

std::size_t relevance(const SpatialIndex& index, VenueIndex v, double r_star_km)
{
    // v is always within its own query (distance 0).
    return index.count_within(index.catalog().position(v), r_star_km) - 1;
}

std::vector<std::uint32_t> relevance_all(const SpatialIndex& index, double r_star_km)
{
    std::vector<std::uint32_t> out(index.catalog().size());
    for (std::size_t v = 0; v < out.size(); ++v)
        out[v] = static_cast<std::uint32_t>(relevance(index, static_cast<VenueIndex>(v), r_star_km));
    return out;
}

JumpDistribution::JumpDistribution(std::vector<double> samples_km) : samples_(std::move(samples_km))
{
    for (double s : samples_)
        if (!(s >= 0.0))
            throw std::invalid_argument("jump lengths must be non-negative");
    if (!samples_.empty()) {
        std::vector<double> sorted = samples_;
        const std::size_t mid = (sorted.size() - 1) / 2;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid),
                         sorted.end());
        median_ = sorted[mid];
    }
}

double JumpDistribution::median() const
{
    if (samples_.empty())
        throw DomainError("median of an empty jump distribution");
    return median_;
}

double JumpDistribution::sample(RandomStream& rng) const
{
    if (samples_.empty())
        throw DomainError("cannot sample an empty jump distribution");
    return samples_[rng.index(samples_.size())];
}

JumpDistribution build_jump_distribution(const Dataset& data, bool drop_zero_length)
{
    const Catalog& catalog = data.catalog();
    constexpr VenueIndex none = static_cast<VenueIndex>(-1);
    std::vector<VenueIndex> last(data.users().size(), none);
    std::vector<double> samples;
    for (const VisitEvent& e : data.events()) {
        VenueIndex& prev = last[e.user];
        if (prev != none && !(drop_zero_length && prev == e.venue))
            samples.push_back(haversine(catalog.position(prev), catalog.position(e.venue)));
        prev = e.venue;
    }
    return JumpDistribution(std::move(samples));
}

} // namespace urbanloop::geo
