#include "urbanloop/mobility/mobility.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace urbanloop;
using namespace urbanloop::mobility;

namespace {

// Venues along the equator, 1 km per 0.008993 degrees of longitude.
std::shared_ptr<const Catalog> equator(const std::vector<std::tuple<std::string, std::string,
                                                                    std::optional<std::string>,
                                                                    double>>& spec)
{
    std::vector<Venue> venues;
    for (const auto& [id, cat, group, km] : spec)
        venues.push_back({id, cat, group, {0.0, km / 111.19508}});
    return std::make_shared<const Catalog>(std::move(venues));
}

UserHistory history_of(std::initializer_list<std::pair<VenueIndex, std::uint32_t>> counts)
{
    UserHistory h;
    for (auto [v, n] : counts)
        h.add(v, n);
    return h;
}

} // namespace

TEST_CASE("user history counts")
{
    UserHistory h;
    CHECK(h.distinct_count() == 0);
    h.add(3);
    h.add(3);
    h.add(5, 4);
    CHECK(h.count(3) == 2);
    CHECK(h.count(5) == 4);
    CHECK(h.count(9) == 0);
    CHECK(h.distinct_count() == 2);
    CHECK_THROWS(h.add(1, 0));
}

TEST_CASE("exploration probability formulas")
{
    const ExplorationPolicy fixed{};
    const ExplorationPolicy per_user{ExplorationMode::per_user};
    CHECK(exploration_probability(per_user, 10, {}) == doctest::Approx(0.6));
    CHECK(exploration_probability(per_user, 10, history_of({{1, 4}})) == doctest::Approx(0.6));
    UserHistory hundred;
    for (VenueIndex v = 0; v < 100; ++v)
        hundred.add(v);
    CHECK(exploration_probability(per_user, 10, hundred) == doctest::Approx(0.2278).epsilon(2e-3));
    CHECK(exploration_probability(fixed, 23459, {}) == doctest::Approx(0.0726).epsilon(2e-3));
    CHECK(exploration_probability(fixed, 23459, hundred) ==
          exploration_probability(fixed, 23459, {}));
    CHECK(exploration_probability({ExplorationMode::fixed_global, 5.0, 0.0}, 3, {}) == 1.0);
    CHECK_THROWS(exploration_probability(fixed, 0, {}));
}

TEST_CASE("per-user exploration probability never rises with S")
{
    const ExplorationPolicy per_user{ExplorationMode::per_user};
    UserHistory h;
    double last = exploration_probability(per_user, 1, h);
    for (VenueIndex v = 0; v < 500; ++v) {
        h.add(v);
        const double p = exploration_probability(per_user, 1, h);
        CHECK(p <= last);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        last = p;
    }
}

TEST_CASE("mode names round trip")
{
    for (std::size_t m = 0; m < decision_mode_count; ++m)
        CHECK(parse_decision_mode(to_string(static_cast<DecisionMode>(m))) ==
              static_cast<DecisionMode>(m));
    CHECK(to_string(DecisionMode::return_) == "return");
    CHECK(parse_exploration_mode("peruser") == ExplorationMode::per_user);
    CHECK(parse_exploration_mode("fixed") == ExplorationMode::fixed_global);
    CHECK_THROWS(parse_exploration_mode("sometimes"));
}

TEST_CASE("preferential return is proportional within the category")
{
    auto cat = equator({{"a", "X", {}, 0}, {"b", "X", {}, 1}, {"c", "Y", {}, 2}});
    const auto h = history_of({{0, 3}, {1, 1}, {2, 50}});
    RandomStream rng(1);
    int a = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const auto v = preferential_return(h, 0, *cat, rng);
        REQUIRE(v);
        CHECK(*v != 2);
        a += (*v == 0);
    }
    CHECK(std::abs(a / double(n) - 0.75) < 0.02);
    CHECK_FALSE(preferential_return(history_of({{2, 1}}), 0, *cat, rng));
    for (int i = 0; i < 20; ++i)
        CHECK(preferential_return(history_of({{1, 5}}), 0, *cat, rng) == VenueIndex{1});
}

TEST_CASE("explore is proportional to relevance over unvisited venues")
{
    const std::vector<VenueIndex> cands = {0, 1, 2, 3};
    const std::vector<std::uint32_t> rel = {2, 1, 9, 9};
    const auto h = history_of({{2, 1}});
    RandomStream rng(5);
    std::map<VenueIndex, int> hits;
    const int n = 30000;
    for (int i = 0; i < n; ++i)
        ++hits[*explore(cands, h, rel, rng, VenueIndex{3})];
    CHECK(hits.size() == 2);
    CHECK(std::abs(hits[0] / double(n) - 2.0 / 3.0) < 0.02);
    CHECK(std::abs(hits[1] / double(n) - 1.0 / 3.0) < 0.02);

    CHECK_FALSE(explore(cands, history_of({{0, 1}, {1, 1}, {2, 1}, {3, 1}}), rel, rng));

    const std::vector<std::uint32_t> zero = {0, 0, 0, 0};
    std::map<VenueIndex, int> z;
    for (int i = 0; i < 30000; ++i)
        ++z[*explore(std::vector<VenueIndex>{0, 1, 2}, {}, zero, rng)];
    for (VenueIndex v = 0; v < 3; ++v)
        CHECK(std::abs(z[v] / 30000.0 - 1.0 / 3.0) < 0.02);
}

TEST_CASE("explore fallback reaches the first-level group within the radius")
{
    // a (current, Bar) ; b Pub 0.5 km in the same group ; c Bar 12 km away.
    auto cat = equator({{"a", "Bar", "Nightlife", 0.0},
                        {"b", "Pub", "Nightlife", 0.5},
                        {"c", "Bar", "Nightlife", 12.0}});
    geo::SpatialIndex index(cat);
    const std::vector<std::uint32_t> rel(3, 1);
    const auto bar = *cat->find_category("Bar");
    RandomStream rng(1);
    const SelectionContext ctx{bar, 0, 1.0, {}};
    CHECK(fallback(FallbackStage::explore, ctx, index, {}, rel, rng) ==
          Choice{1, DecisionMode::fallback_first_level});
    // With b already visited the group stage fails and the nearest Bar wins.
    CHECK(fallback(FallbackStage::explore, ctx, index, history_of({{1, 1}}), rel, rng) ==
          Choice{2, DecisionMode::fallback_nearest});
}

TEST_CASE("nearest fallback ignores the radius")
{
    auto cat = equator({{"a", "Bar", {}, 0.0}, {"b", "Bar", {}, 12.0}, {"c", "Bar", {}, 30.0}});
    geo::SpatialIndex index(cat);
    const std::vector<std::uint32_t> rel(3, 0);
    RandomStream rng(1);
    const Choice c = fallback(FallbackStage::explore, {0, 0, 0.5, {}}, index, {}, rel, rng);
    CHECK(c == Choice{1, DecisionMode::fallback_nearest});
}

TEST_CASE("return fallback without a hierarchy switches to exploration")
{
    auto cat = equator({{"a", "Bar", {}, 0.0}, {"b", "Bar", {}, 0.3}, {"c", "Cafe", {}, 0.1}});
    geo::SpatialIndex index(cat);
    const std::vector<std::uint32_t> rel(3, 1);
    RandomStream rng(1);
    const std::vector<VenueIndex> cands = {0, 1};
    const Choice c =
        fallback(FallbackStage::return_, {0, 0, 1.0, cands}, index, history_of({{2, 3}}), rel, rng);
    CHECK(c == Choice{1, DecisionMode::fallback_to_explore});
    // Nothing new inside the radius: the explore chain's nearest step still
    // counts as a switch to exploration.
    const Choice far =
        fallback(FallbackStage::return_, {0, 0, 0.1, {}}, index, history_of({{2, 3}}), rel, rng);
    CHECK(far == Choice{1, DecisionMode::fallback_to_explore});
}

TEST_CASE("return fallback prefers the first-level group history")
{
    auto cat = equator({{"a", "Bar", "Nightlife", 0.0},
                        {"b", "Pub", "Nightlife", 5.0},
                        {"c", "Cafe", "Food", 0.1}});
    geo::SpatialIndex index(cat);
    const std::vector<std::uint32_t> rel(3, 1);
    RandomStream rng(1);
    const auto bar = *cat->find_category("Bar");
    const Choice c = fallback(FallbackStage::return_, {bar, 2, 1.0, {}}, index,
                              history_of({{1, 2}, {2, 7}}), rel, rng);
    CHECK(c == Choice{1, DecisionMode::fallback_first_level});
}

TEST_CASE("a category with no other venue degenerates to the current venue")
{
    auto cat = equator({{"a", "Bar", {}, 0.0}, {"b", "Cafe", {}, 0.1}});
    geo::SpatialIndex index(cat);
    const std::vector<std::uint32_t> rel(2, 1);
    RandomStream rng(1);
    for (auto stage : {FallbackStage::explore, FallbackStage::return_})
        CHECK(fallback(stage, {0, 0, 5.0, {}}, index, {}, rel, rng) ==
              Choice{0, DecisionMode::degenerate});
}
