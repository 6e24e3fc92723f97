#include "urbanloop/common/error.hpp"
#include "urbanloop/ingest/loader.hpp"
#include "urbanloop/ingest/preprocess.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <sstream>

using namespace urbanloop;

namespace {

const char* foursquare_rows =
    "u2\tvB\t4bf\tOffice\t40.72\t-73.99\t-240\tTue Apr 03 18:05:00 +0000 2012\n"
    "u1\tvA\t4bf\tBar\t40.71\t-74.00\t-240\tTue Apr 03 18:00:09 +0000 2012\n"
    "u1\tvC\t4bf\tBar\t40.73\t-73.98\t-240\tWed Apr 04 10:00:00 +0000 2012\n"
    "u3\tvA\t4bf\tCafe\t99.0\t-73.98\t-240\tWed Apr 04 11:00:00 +0000 2012\n"
    "garbage line\n";

} // namespace

TEST_CASE("foursquare rows load sorted with bad rows counted")
{
    std::istringstream in(foursquare_rows);
    LoadReport report;
    const Dataset d = read_checkins(in, {}, &report);
    CHECK(report.rows_read == 5);
    CHECK(report.rows_loaded == 3);
    CHECK(report.rows_skipped == 2);
    CHECK(report.sample_errors.size() == 2);
    REQUIRE(d.size() == 3);
    CHECK(d.user_id(d.events()[0]) == "u1");
    CHECK(d.venue_of(d.events()[0]).id == "vA");
    CHECK(d.events()[0].time == 1333476009);
    CHECK(d.events()[0].tz_offset_minutes == -240);
    CHECK(d.venue_of(d.events()[1]).category == "Office");
    CHECK(d.catalog().size() == 3);
}

TEST_CASE("fail policy rejects the first bad row")
{
    std::istringstream in(foursquare_rows);
    LoadOptions opts;
    opts.policy = MalformedRowPolicy::fail;
    CHECK_THROWS_AS(read_checkins(in, opts), DataError);
}

TEST_CASE("canonical output reloads to an equal dataset")
{
    const Dataset d = testing::make_city({.venues = 40, .users = 6, .visits_per_user = 10});
    std::stringstream buf;
    write_canonical(d, buf);
    LoadOptions opts;
    opts.format = CheckinFormat::canonical;
    opts.policy = MalformedRowPolicy::fail;
    const Dataset back = read_checkins(buf, opts).compacted();
    const Dataset original = d.compacted();
    REQUIRE(back.size() == original.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back.user_id(back.events()[i]) == original.user_id(original.events()[i]));
        CHECK(back.venue_of(back.events()[i]).id == original.venue_of(original.events()[i]).id);
        CHECK(back.venue_of(back.events()[i]).position ==
              original.venue_of(original.events()[i]).position);
        CHECK(back.events()[i].time == original.events()[i].time);
    }
}

TEST_CASE("catalog sorts by id and interns categories")
{
    Catalog c({{"b", "Bar", "Nightlife", {40.0, -74.0}},
               {"a", "Cafe", "Food", {40.1, -74.1}},
               {"c", "Bar", "Nightlife", {40.2, -74.2}}});
    CHECK(c.venue(0).id == "a");
    CHECK(c.find("c") == VenueIndex{2});
    CHECK_FALSE(c.find("zz"));
    const auto bar = c.find_category("Bar");
    REQUIRE(bar);
    CHECK(c.venues_in_category(*bar).size() == 2);
    CHECK(c.group_of(*bar).has_value());
    CHECK_THROWS(Catalog({{"a", "Bar", std::nullopt, {0, 0}}, {"a", "Bar", std::nullopt, {1, 1}}}));
    CHECK_THROWS(Catalog({{"a", "Bar", std::nullopt, {91, 0}}}));
    CHECK_THROWS(Catalog({{"a", "Bar", "X", {0, 0}}, {"b", "Bar", "Y", {1, 1}}}));
}

TEST_CASE("hierarchy file attaches first-level groups")
{
    std::istringstream in("second_level,first_level\nBar,Nightlife\n# comment\nCafe,Food\n");
    const auto h = read_category_hierarchy(in);
    CHECK(h.size() == 2);
    std::istringstream rows(foursquare_rows);
    const Dataset d = apply_hierarchy(read_checkins(rows), h);
    const auto bar = d.catalog().find_category("Bar");
    REQUIRE(bar);
    const auto g = d.catalog().group_of(*bar);
    REQUIRE(g);
    CHECK(d.catalog().group_name(*g) == "Nightlife");
    CHECK_FALSE(d.catalog().group_of(*d.catalog().find_category("Office")));

    std::istringstream conflict("Bar,Nightlife\nBar,Food\n");
    CHECK_THROWS_AS(read_category_hierarchy(conflict), DataError);
    CHECK(load_category_hierarchy("/nonexistent/hierarchy.csv").empty());
}

TEST_CASE("preprocess drops excluded categories and compacts")
{
    std::istringstream in(foursquare_rows);
    const Dataset d = read_checkins(in);
    const Dataset p = preprocess(d);
    CHECK(p.size() == 2);
    CHECK(p.catalog().size() == 2);
    CHECK(p.users().size() == 1);
    CHECK(preprocess(d, {}) == d);
    CHECK(default_excluded_categories().size() == 16);
}

TEST_CASE("split partitions on day offsets from the first event")
{
    Catalog c({{"a", "Bar", std::nullopt, {40, -74}}});
    auto cat = std::make_shared<const Catalog>(c);
    auto users = std::make_shared<const UserTable>(std::vector<std::string>{"u"});
    const Timestamp day = 86400;
    std::vector<VisitEvent> ev;
    for (Timestamp t : {Timestamp{0}, 2 * day, 3 * day, 3 * day + 1, 5 * day, 5 * day + 1})
        ev.push_back({0, 0, 1000 + t, 0});
    const Dataset d(cat, users, ev);
    const auto s = split(d, {3.0, 5.0});
    CHECK(s.train.size() == 3);
    CHECK(s.post.size() == 2);
    CHECK_THROWS(split(d, {5.0, 3.0}));
    CHECK(split(d.with_events({}), {3.0, 5.0}).post.empty());
}

TEST_CASE("dataset rejects unsorted or out-of-range events")
{
    auto cat = std::make_shared<const Catalog>(
        std::vector<Venue>{{"a", "Bar", std::nullopt, {40, -74}}});
    auto users = std::make_shared<const UserTable>(std::vector<std::string>{"u"});
    CHECK_THROWS(Dataset(cat, users, {{0, 0, 5, 0}, {0, 0, 4, 0}}));
    CHECK_THROWS(Dataset(cat, users, {{1, 0, 5, 0}}));
    CHECK_THROWS(Dataset(cat, users, {{0, 1, 5, 0}}));
}
