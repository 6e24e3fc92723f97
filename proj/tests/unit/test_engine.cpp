#include "urbanloop/engine/engine.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace urbanloop;
using namespace urbanloop::engine;
using mobility::DecisionMode;

namespace {

const World& city_world()
{
    static const World world = [] {
        const Dataset d = testing::make_city({.venues = 250, .users = 40, .visits_per_user = 60});
        return build_world(d, {SplitSpec{200.0, 300.0}});
    }();
    return world;
}

std::string visits_csv(const SimulationResult& r, const World& w)
{
    std::ostringstream out;
    write_visits_csv(r, w, out);
    return out.str();
}

// A scorer that must never be asked for scores.
void register_probe_kinds()
{
    auto& reg = recsys::RecommenderRegistry::instance();
    if (reg.contains("Untouchable"))
        return;
    struct Untouchable final : recsys::Scorer
    {
        std::string_view kind() const override { return "Untouchable"; }
        void score(UserIndex, std::span<const VenueIndex>, const recsys::ScoringContext&,
                   std::span<double>) const override
        {
            throw std::logic_error("scored");
        }
        nlohmann::json to_json() const override { return {}; }
    };
    auto load = [](const nlohmann::json&, const std::shared_ptr<const Catalog>&)
        -> std::shared_ptr<const recsys::Scorer> { return std::make_shared<const Untouchable>(); };
    reg.add(
        "Untouchable",
        [](const recsys::TrainingInput&, recsys::TrainingReport&)
            -> std::shared_ptr<const recsys::Scorer> { return std::make_shared<const Untouchable>(); },
        load);
    reg.add(
        "Broken",
        [](const recsys::TrainingInput&, recsys::TrainingReport&)
            -> std::shared_ptr<const recsys::Scorer> { throw std::runtime_error("cannot fit"); },
        load);
}

} // namespace

TEST_CASE("retraining windows follow the t - t_last > delta rule")
{
    const Timestamp day = 86400;
    std::vector<VisitEvent> post;
    for (double d : {1.0, 3.0, 7.5, 10.0, 14.6, 18.0, 21.0})
        post.push_back({0, 0, static_cast<Timestamp>(d * day), 0});
    const auto w = retraining_windows(post, 0, 7.0);
    REQUIRE(w.size() == 3);
    CHECK(w[0].end == 3);
    CHECK(w[1].begin == 3);
    CHECK(w[1].end == 5);
    CHECK(w[2].end == 7);

    // Exactly delta later does not trigger.
    const std::vector<VisitEvent> edge = {{0, 0, 7 * day, 0}, {0, 0, 7 * day + 1, 0},
                                          {0, 0, 8 * day, 0}};
    const auto e = retraining_windows(edge, 0, 7.0);
    REQUIRE(e.size() == 2);
    CHECK(e[0].end == 2);
    // A trigger on the last event adds no empty window.
    const std::vector<VisitEvent> last = {{0, 0, 8 * day, 0}};
    CHECK(retraining_windows(last, 0, 7.0).size() == 1);
    CHECK(retraining_windows({}, 0, 7.0).size() == 1);
}

TEST_CASE("simulation replaces every post event")
{
    const World& w = city_world();
    REQUIRE(!w.post.empty());
    for (double eta : {0.0, 0.5, 1.0}) {
        SimulationConfig c;
        c.eta = eta;
        c.algorithm = "UserKNN";
        c.seed = 7;
        const auto r = run_simulation(w, c);
        REQUIRE(r.visits.size() == w.post.size());
        CHECK(r.retrain_count + 1 == r.windows.size());
        std::size_t total = 0;
        for (std::size_t n : r.mode_counts)
            total += n;
        CHECK(total == r.visits.size());
        for (std::size_t i = 0; i < r.visits.size(); ++i) {
            const auto& real = w.post.events()[i];
            const auto& sim = r.visits[i];
            CHECK(sim.event.time == real.time);
            CHECK(sim.event.user == real.user);
            if (sim.mode != DecisionMode::fallback_first_level &&
                sim.mode != DecisionMode::fallback_to_explore &&
                sim.mode != DecisionMode::degenerate)
                CHECK(w.catalog->category_of(sim.event.venue) ==
                      w.catalog->category_of(real.venue));
            if (eta == 0.0)
                CHECK(sim.mode != DecisionMode::rec);
            if (eta == 1.0) {
                CHECK(sim.mode != DecisionMode::explore);
                CHECK(sim.mode != DecisionMode::return_);
            }
            CHECK(r.visits[i].epoch < r.windows.size());
        }
    }
}

TEST_CASE("eta zero never asks the recommender for scores")
{
    register_probe_kinds();
    SimulationConfig c;
    c.algorithm = "Untouchable";
    CHECK_NOTHROW(run_simulation(city_world(), c));
    c.eta = 1.0;
    CHECK_THROWS(run_simulation(city_world(), c));
}

TEST_CASE("output does not depend on the worker count")
{
    const World& w = city_world();
    SimulationConfig c;
    c.eta = 0.6;
    c.algorithm = "ItemKNN";
    c.seed = 99;
    c.workers = 1;
    const auto one = visits_csv(run_simulation(w, c), w);
    c.workers = 8;
    const auto eight = visits_csv(run_simulation(w, c), w);
    CHECK(one == eight);
    c.anchor = AnchorMode::simulated;
    c.workers = 1;
    const auto a = visits_csv(run_simulation(w, c), w);
    c.workers = 8;
    CHECK(a == visits_csv(run_simulation(w, c), w));
    c.seed = 100;
    CHECK(a != visits_csv(run_simulation(w, c), w));
}

TEST_CASE("visits CSV layout")
{
    const World& w = city_world();
    SimulationConfig c;
    const auto text = visits_csv(run_simulation(w, c), w);
    std::istringstream in(text);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "user_id,venue_id,category,lat,lon,timestamp_iso8601,mode,epoch_index");
    CHECK(std::count(first.begin(), first.end(), ',') == 7);
    CHECK(first.find('T') != std::string::npos);
}

TEST_CASE("forced choice under full adoption")
{
    std::vector<Venue> venues = {{"a", "Bar", std::nullopt, {0, 0}},
                                 {"b", "Bar", std::nullopt, {0, 0.05}},
                                 {"c", "Cafe", std::nullopt, {0, 0.001}}};
    World w;
    w.catalog = std::make_shared<const Catalog>(venues);
    w.index = std::make_shared<const geo::SpatialIndex>(w.catalog);
    w.jumps = geo::JumpDistribution({0.1});
    w.relevance = geo::relevance_all(*w.index, 0.1);
    RandomStream rng(1);
    const auto model = recsys::retrain("Popularity", {}, {}, 1, w.catalog, {}, rng);
    SimulationConfig c;
    c.eta = 1.0;
    mobility::UserHistory h;
    SelectionTrace trace;
    const auto choice = select_venue(w, model, c, 0, 0, 0, 0, h, rng, &trace);
    CHECK(choice == mobility::Choice{0, DecisionMode::rec});
    CHECK(trace.followed_recommender);
    CHECK(trace.candidates == 1);
    CHECK(h.count(0) == 1);
}

TEST_CASE("exploration frequency matches the mean exploration probability")
{
    const World& w = city_world();
    RandomStream rng(31);
    const auto model = recsys::retrain("Popularity", w.train.events(), {},
                                       w.train.users().size(), w.catalog, {}, rng);
    SimulationConfig c;
    c.policy.mode = mobility::ExplorationMode::per_user;
    std::vector<mobility::UserHistory> histories(w.train.users().size());
    double p_sum = 0.0;
    std::size_t explored = 0;
    const std::size_t n = 10000;
    const auto post = w.post.events();
    for (std::size_t i = 0; i < n; ++i) {
        const VisitEvent& e = post[i % post.size()];
        SelectionTrace t;
        select_venue(w, model, c, e.user, e.venue, e.time, w.catalog->category_of(e.venue),
                     histories[e.user], rng, &t);
        REQUIRE(t.p_explore);
        p_sum += *t.p_explore;
        explored += t.explored;
    }
    CHECK(std::abs(explored / double(n) - p_sum / double(n)) < 0.02);
}

TEST_CASE("vanishing exploration turns into preferential return")
{
    const World& w = city_world();
    RandomStream rng(2);
    const auto model = recsys::retrain("Popularity", w.train.events(), {},
                                       w.train.users().size(), w.catalog, {}, rng);
    SimulationConfig c;
    c.policy = {mobility::ExplorationMode::per_user, 0.6, 40.0};
    std::size_t returns = 0;
    const std::size_t n = 2000;
    for (std::size_t i = 0; i < n; ++i) {
        const VisitEvent& e = w.post.events()[i % w.post.size()];
        mobility::UserHistory h;
        h.add(e.venue, 3);
        h.add(e.venue == 0 ? 1 : 0);
        const auto choice = select_venue(w, model, c, e.user, e.venue, e.time,
                                         w.catalog->category_of(e.venue), h, rng);
        returns += choice.mode == DecisionMode::return_;
    }
    CHECK(returns == n);
}

TEST_CASE("selection always yields a venue")
{
    const World& w = city_world();
    RandomStream rng(3);
    const auto model = recsys::retrain("UserKNN", w.train.events(), {}, w.train.users().size(),
                                       w.catalog, {}, rng);
    for (double eta : {0.0, 1.0}) {
        SimulationConfig c;
        c.eta = eta;
        for (int i = 0; i < 2000; ++i) {
            const VenueIndex anchor = static_cast<VenueIndex>(rng.index(w.catalog->size()));
            const CategoryIndex cat =
                static_cast<CategoryIndex>(rng.index(w.catalog->category_count()));
            mobility::UserHistory h;
            const auto choice = select_venue(w, model, c, 0, anchor, 0, cat, h, rng);
            CHECK(choice.venue < w.catalog->size());
            CHECK(choice.mode != DecisionMode::degenerate);
        }
    }
}

TEST_CASE("empty post split gives an empty simulation")
{
    const World& w = city_world();
    World empty = w;
    empty.post = w.post.with_events({});
    const auto r = run_simulation(empty, SimulationConfig{});
    CHECK(r.visits.empty());
    CHECK(r.retrain_count == 0);
}

TEST_CASE("config validation")
{
    SimulationConfig c;
    CHECK_NOTHROW(c.validate());
    c.eta = 1.5;
    CHECK_THROWS(c.validate());
    c = {};
    c.delta_days = 0;
    CHECK_THROWS(c.validate());
    c = {};
    c.top_k = 0;
    CHECK_THROWS(c.validate());
    c = {};
    c.algorithm = "nope";
    CHECK_THROWS(c.validate());
}

TEST_CASE("sweep grid, aggregation and failure isolation")
{
    register_probe_kinds();
    const World& w = city_world();
    SimulationConfig base;
    base.seed = 5;
    SweepOptions opts;
    opts.etas = {0.0, 1.0};
    opts.algorithms = {"Popularity", "Broken"};
    opts.runs = 2;
    opts.cell_workers = 3;
    const auto out = sweep(w, base, opts);
    CHECK(out.size() == 8);
    std::size_t failed = 0;
    for (const auto& o : out)
        failed += !o.ok();
    // The initial fit happens even when eta is 0.
    CHECK(failed == 4);
    const auto rows = aggregate(out);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].algorithm == "Popularity");
    CHECK(rows[0].runs == 2);
    CHECK(rows[1].failed == 2);

    opts.algorithms = {"Popularity"};
    opts.runs = 1;
    const auto single = aggregate(sweep(w, base, opts));
    for (const auto& [name, stat] : single[0].stats)
        if (std::isfinite(stat.second))
            CHECK(stat.second == 0.0);

    std::ostringstream a, b;
    opts.runs = 2;
    write_aggregate_csv(aggregate(sweep(w, base, opts)), a);
    opts.cell_workers = 1;
    write_aggregate_csv(aggregate(sweep(w, base, opts)), b);
    const std::string text = a.str();
    CHECK(text == b.str());
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
