#include "synthetic.hpp"

#include "urbanloop/common/random.hpp"
#include "urbanloop/geo/geo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace urbanloop::testing {

namespace {

std::string numbered(const char* prefix, std::size_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
    return buf;
}

} // namespace

Dataset make_city(const SyntheticCity& city)
{
    RandomStream rng(city.seed);
    const LatLon origin{40.70, -74.02};
    const double deg_lat = city.span_km / 111.2;
    const double deg_lon = deg_lat / std::cos(origin.lat * 3.141592653589793 / 180.0);

    std::vector<Venue> venues;
    for (std::size_t i = 0; i < city.venues; ++i) {
        const std::size_t c = i % city.categories;
        Venue v;
        v.id = numbered("v", i);
        v.category = numbered("Category ", c);
        if (city.groups > 0)
            v.first_level_category = numbered("Group ", c % city.groups);
        v.position = {origin.lat + rng.uniform() * deg_lat, origin.lon + rng.uniform() * deg_lon};
        venues.push_back(std::move(v));
    }
    auto catalog = std::make_shared<const Catalog>(venues);

    std::vector<std::string> user_ids;
    for (std::size_t u = 0; u < city.users; ++u)
        user_ids.push_back(numbered("u", u));
    auto users = std::make_shared<const UserTable>(user_ids);

    const Timestamp start = 1333476009;
    const double span_seconds = city.days * 86400.0;
    std::vector<VisitEvent> events;
    std::vector<double> weights(catalog->size());
    for (UserIndex u = 0; u < city.users; ++u) {
        const LatLon home = catalog->position(static_cast<VenueIndex>(rng.index(catalog->size())));
        for (VenueIndex v = 0; v < catalog->size(); ++v)
            weights[v] = std::exp(-geo::haversine(home, catalog->position(v)) / city.decay_km);
        std::vector<VenueIndex> favourites;
        std::vector<Timestamp> times;
        for (std::size_t k = 0; k < city.visits_per_user; ++k)
            times.push_back(start + static_cast<Timestamp>(rng.uniform() * span_seconds));
        std::sort(times.begin(), times.end());
        for (Timestamp t : times) {
            VenueIndex v;
            if (!favourites.empty() && rng.bernoulli(city.revisit)) {
                v = favourites[rng.index(favourites.size())];
            } else {
                v = static_cast<VenueIndex>(rng.weighted(weights));
                if (favourites.size() < 8)
                    favourites.push_back(v);
            }
            events.push_back({u, v, t, 0});
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const VisitEvent& a, const VisitEvent& b) { return a.time < b.time; });
    return Dataset(catalog, users, std::move(events));
}

} // namespace urbanloop::testing
