#include "urbanloop/cli/experiment.hpp"

#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace urbanloop;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("urbanloop_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path city_csv(const fs::path& dir)
{
    const fs::path path = dir / "city.csv";
    write_canonical(testing::make_city({.venues = 200, .users = 30, .visits_per_user = 50}), path);
    return path;
}

} // namespace

TEST_CASE("config files: comments, blanks and later keys win")
{
    std::istringstream in("# header\n\neta = 0.5 # trailing\nalgo=UserKNN\n eta = 0, 1 \n");
    const auto pairs = cli::read_config(in);
    REQUIRE(pairs.size() == 3);
    cli::ExperimentSpec spec;
    for (const auto& [k, v] : pairs)
        cli::apply_setting(spec, k, v);
    CHECK(spec.etas == std::vector<double>{0.0, 1.0});
    CHECK(spec.algorithms == std::vector<std::string>{"UserKNN"});

    std::istringstream bad("eta 0.5\n");
    CHECK_THROWS(cli::read_config(bad));
}

TEST_CASE("settings parse and reject bad values")
{
    cli::ExperimentSpec spec;
    cli::apply_setting(spec, "delta-days", "3.5");
    cli::apply_setting(spec, "topk", "10");
    cli::apply_setting(spec, "explore_mode", "peruser");
    cli::apply_setting(spec, "anchor", "simulated");
    cli::apply_setting(spec, "exclude", "none");
    cli::apply_setting(spec, "algo", "bprmf");
    CHECK(spec.simulation.delta_days == 3.5);
    CHECK(spec.simulation.top_k == 10);
    CHECK(spec.simulation.policy.mode == mobility::ExplorationMode::per_user);
    CHECK(spec.simulation.anchor == engine::AnchorMode::simulated);
    CHECK(spec.excluded.empty());
    CHECK(spec.algorithms == std::vector<std::string>{"BPRMF"});
    CHECK_NOTHROW(spec.validate());

    CHECK_THROWS_AS(cli::apply_setting(spec, "no_such_key", "1"), std::invalid_argument);
    CHECK_THROWS_AS(cli::apply_setting(spec, "runs", "-1"), std::invalid_argument);
    CHECK_THROWS_AS(cli::apply_setting(spec, "rho", "abc"), std::invalid_argument);
    CHECK_THROWS_AS(cli::apply_setting(spec, "algo", "Magic"), std::invalid_argument);
    cli::apply_setting(spec, "eta", "1.5");
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("config hash tracks outputs, not paths or threads")
{
    cli::ExperimentSpec a, b;
    b.out_dir = "elsewhere";
    b.cell_workers = 4;
    b.simulation.workers = 8;
    CHECK(cli::config_hash(a) == cli::config_hash(b));
    CHECK(cli::config_hash(a).size() == 16);
    b.simulation.seed = 1;
    CHECK(cli::config_hash(a) != cli::config_hash(b));
}

TEST_CASE("user subsample keeps whole users and is seeded")
{
    const Dataset d = testing::make_city({.users = 40, .visits_per_user = 20});
    RandomStream r1(4), r2(4), r3(5);
    const Dataset a = cli::subsample_users(d, 10, r1);
    const Dataset b = cli::subsample_users(d, 10, r2);
    const Dataset c = cli::subsample_users(d, 10, r3);
    CHECK(a == b);
    CHECK(!(a == c));
    CHECK(a.active_users().size() == 10);
    CHECK(a.size() == 10 * 20);
    CHECK(a.catalog().size() == d.catalog().size());
    RandomStream r4(4);
    const Dataset pruned = cli::subsample_users(d, 10, r4, true);
    CHECK(pruned.catalog().size() == pruned.active_venues().size());
    RandomStream r5(4);
    CHECK_THROWS_AS(cli::subsample_users(d, 41, r5), std::invalid_argument);
    RandomStream r6(4);
    CHECK(cli::subsample_users(d, 40, r6).size() == d.size());
}

TEST_CASE("cell names")
{
    CHECK(cli::cell_name({0.2, "UserKNN", 0, 0}) == "eta0.2_UserKNN_r0");
    CHECK(cli::cell_name({1.0, "MF", 3, 0}) == "eta1_MF_r3");
}

TEST_CASE("end-to-end sweep writes every artifact reproducibly")
{
    const fs::path dir = scratch("sweep");
    cli::ExperimentSpec spec;
    cli::apply_setting(spec, "checkins", city_csv(dir).string());
    cli::apply_setting(spec, "format", "canonical");
    cli::apply_setting(spec, "eta", "0,1");
    cli::apply_setting(spec, "algo", "Popularity,ItemKNN");
    cli::apply_setting(spec, "runs", "2");
    cli::apply_setting(spec, "seed", "11");
    cli::apply_setting(spec, "cell_workers", "2");

    spec.out_dir = dir / "a";
    REQUIRE(cli::run_experiment(spec) == 0);
    spec.out_dir = dir / "b";
    cli::apply_setting(spec, "cell_workers", "1");
    cli::apply_setting(spec, "workers", "4");
    REQUIRE(cli::run_experiment(spec) == 0);

    const std::string agg = slurp(dir / "a/aggregate.csv");
    CHECK(agg == slurp(dir / "b/aggregate.csv"));
    CHECK(std::count(agg.begin(), agg.end(), '\n') == 1 + 4);
    for (const char* f : {"visits/eta1_ItemKNN_r1.csv", "metrics/eta0_Popularity_r0.json",
                          "plotdata/eta0_Popularity_r0_lorenz.csv", "plotdata/jump_lengths.csv"}) {
        CAPTURE(f);
        CHECK(fs::exists(dir / "a" / f));
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    const auto manifest = nlohmann::json::parse(slurp(dir / "a/manifest.json"));
    CHECK(manifest["cells"].size() == 8);
    CHECK(manifest["failed_cells"] == 0);
    CHECK(manifest["config_hash"] == cli::config_hash(spec));
}

TEST_CASE("evaluation of a recommender that always knows the answer")
{
    // Every user visits the single venue of its category, so the target
    // ranks first whenever it is scored.
    std::vector<Venue> venues = {{"a", "Bar", std::nullopt, {40.7, -74.0}},
                                 {"b", "Cafe", std::nullopt, {40.71, -74.0}}};
    auto catalog = std::make_shared<const Catalog>(venues);
    auto users = std::make_shared<const UserTable>(std::vector<std::string>{"u1", "u2"});
    const Timestamp day = 86400;
    std::vector<VisitEvent> events;
    for (Timestamp d = 0; d < 20; ++d) {
        events.push_back({0, static_cast<VenueIndex>(d % 2), d * day, 0});
        events.push_back({1, static_cast<VenueIndex>((d + 1) % 2), d * day + 1, 0});
    }
    const Dataset data(catalog, users, events);
    const auto world = engine::build_world(data, {SplitSpec{10.0, 19.5}});
    const auto rows =
        cli::evaluate_recommenders(world, {"Popularity", "UserKNN"}, {}, 1);
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CAPTURE(row.algorithm);
        CHECK(row.error.empty());
        CHECK(row.result.hit_rate == 1.0);
        CHECK(row.result.mrr == 1.0);
        CHECK(row.result.evaluated == world.post.size());
    }
    std::ostringstream out;
    cli::write_evaluation_csv(rows, out);
    CHECK(out.str().rfind("algorithm,hitrate_at_20,mrr_at_20,evaluated_visits,skipped_visits\n", 0) == 0);
}
