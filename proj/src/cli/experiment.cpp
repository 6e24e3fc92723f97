#include "urbanloop/cli/experiment.hpp"

#include "urbanloop/common/csv.hpp"
#include "urbanloop/common/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace urbanloop::cli {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view text)
{
    std::vector<std::string> out;
    while (true) {
        const auto comma = text.find(',');
        const auto item = trim(text.substr(0, comma));
        if (!item.empty())
            out.emplace_back(item);
        if (comma == std::string_view::npos)
            break;
        text.remove_prefix(comma + 1);
    }
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value)
{
    throw std::invalid_argument("bad value '" + std::string(value) + "' for " + std::string(key));
}

double to_double(std::string_view key, std::string_view value)
{
    const auto x = csv::parse_double(trim(value));
    if (!x)
        bad_value(key, value);
    return *x;
}

std::uint64_t to_unsigned(std::string_view key, std::string_view value)
{
    value = trim(value);
    std::uint64_t x = 0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
    if (ec != std::errc() || end != value.data() + value.size() || value.empty())
        bad_value(key, value);
    return x;
}

bool to_bool(std::string_view key, std::string_view value)
{
    value = trim(value);
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    bad_value(key, value);
}

std::string hex64(std::uint64_t x)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

void write_file(const fs::path& path, const std::string& text)
{
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << text;
    if (!out)
        throw DataError("failed writing " + path.string());
}

std::string dump(const nlohmann::json& j)
{
    return j.dump(2) + "\n";
}

} // namespace

void ExperimentSpec::validate() const
{
    split.validate();
    if (etas.empty())
        throw std::invalid_argument("empty eta grid");
    for (double eta : etas)
        if (!(eta >= 0.0 && eta <= 1.0))
            throw std::invalid_argument("eta values must lie in [0, 1]");
    if (algorithms.empty())
        throw std::invalid_argument("no algorithms selected");
    for (const auto& a : algorithms)
        if (!recsys::RecommenderRegistry::instance().contains(a))
            throw std::invalid_argument("unknown algorithm '" + a + "'");
    if (runs == 0)
        throw std::invalid_argument("runs must be at least 1");
    if (user_subsample && *user_subsample == 0)
        throw std::invalid_argument("subsample must be at least 1");
    if (cell_workers == 0)
        throw std::invalid_argument("cell_workers must be at least 1");
    engine::SimulationConfig probe = simulation;
    probe.eta = etas.front();
    probe.algorithm = algorithms.front();
    probe.validate();
}

void apply_setting(ExperimentSpec& spec, std::string_view raw_key, std::string_view value)
{
    std::string key(trim(raw_key));
    std::replace(key.begin(), key.end(), '-', '_');
    value = trim(value);
    auto& sim = spec.simulation;
    auto& train = sim.training;

    if (key == "checkins") {
        spec.checkins = std::string(value);
    } else if (key == "hierarchy") {
        spec.hierarchy = std::string(value);
    } else if (key == "format") {
        if (value == "foursquare")
            spec.format = CheckinFormat::foursquare;
        else if (value == "canonical")
            spec.format = CheckinFormat::canonical;
        else
            bad_value(key, value);
    } else if (key == "exclude") {
        if (value == "default")
            spec.excluded = default_excluded_categories();
        else if (value == "none")
            spec.excluded.clear();
        else {
            const auto items = split_list(value);
            spec.excluded = CategorySet(items.begin(), items.end());
        }
    } else if (key == "t_train_days") {
        spec.split.t_train_days = to_double(key, value);
    } else if (key == "t_max_days") {
        spec.split.t_max_days = to_double(key, value);
    } else if (key == "eta") {
        spec.etas.clear();
        for (const auto& item : split_list(value))
            spec.etas.push_back(to_double(key, item));
    } else if (key == "algo" || key == "algorithms") {
        spec.algorithms.clear();
        for (const auto& item : split_list(value))
            spec.algorithms.push_back(
                recsys::RecommenderRegistry::instance().canonical_name(item));
    } else if (key == "delta_days") {
        sim.delta_days = to_double(key, value);
    } else if (key == "topk" || key == "top_k") {
        sim.top_k = to_unsigned(key, value);
    } else if (key == "explore_mode") {
        sim.policy.mode = mobility::parse_exploration_mode(value);
    } else if (key == "rho") {
        sim.policy.rho = to_double(key, value);
    } else if (key == "gamma") {
        sim.policy.gamma = to_double(key, value);
    } else if (key == "anchor") {
        sim.anchor = engine::parse_anchor_mode(value);
    } else if (key == "seed") {
        sim.seed = to_unsigned(key, value);
    } else if (key == "runs") {
        spec.runs = to_unsigned(key, value);
    } else if (key == "subsample") {
        if (value == "none" || value.empty())
            spec.user_subsample.reset();
        else
            spec.user_subsample = to_unsigned(key, value);
    } else if (key == "prune_catalog") {
        spec.prune_catalog = to_bool(key, value);
    } else if (key == "drop_zero_jumps") {
        spec.drop_zero_jumps = to_bool(key, value);
    } else if (key == "workers") {
        sim.workers = to_unsigned(key, value);
    } else if (key == "cell_workers") {
        spec.cell_workers = to_unsigned(key, value);
    } else if (key == "out") {
        spec.out_dir = std::string(value);
    } else if (key == "neighbors") {
        train.neighbors = to_unsigned(key, value);
    } else if (key == "factors") {
        train.factors = to_unsigned(key, value);
    } else if (key == "learning_rate") {
        train.learning_rate = to_double(key, value);
    } else if (key == "l2") {
        train.l2 = to_double(key, value);
    } else if (key == "batch_size") {
        train.batch_size = to_unsigned(key, value);
    } else if (key == "max_epochs") {
        train.max_epochs = to_unsigned(key, value);
    } else if (key == "patience") {
        train.patience = to_unsigned(key, value);
    } else if (key == "min_delta") {
        train.min_delta = to_double(key, value);
    } else {
        throw std::invalid_argument("unknown setting '" + key + "'");
    }
}

std::vector<std::pair<std::string, std::string>> read_config(std::istream& in)
{
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = trim(view);
        if (view.empty())
            continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("config line " + std::to_string(number) +
                                        ": expected key = value");
        out.emplace_back(trim(view.substr(0, eq)), trim(view.substr(eq + 1)));
    }
    return out;
}

void load_config(ExperimentSpec& spec, const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open config " + path.string());
    for (const auto& [key, value] : read_config(in))
        apply_setting(spec, key, value);
}

nlohmann::json to_json(const ExperimentSpec& spec)
{
    nlohmann::json sim = engine::to_json(spec.simulation);
    sim.erase("eta");
    sim.erase("algorithm");
    return {{"checkins", spec.checkins.generic_string()},
            {"hierarchy", spec.hierarchy.generic_string()},
            {"format", spec.format == CheckinFormat::foursquare ? "foursquare" : "canonical"},
            {"excluded", std::vector<std::string>(spec.excluded.begin(), spec.excluded.end())},
            {"t_train_days", spec.split.t_train_days},
            {"t_max_days", spec.split.t_max_days},
            {"etas", spec.etas},
            {"algorithms", spec.algorithms},
            {"simulation", sim},
            {"runs", spec.runs},
            {"subsample", spec.user_subsample ? nlohmann::json(*spec.user_subsample)
                                              : nlohmann::json(nullptr)},
            {"prune_catalog", spec.prune_catalog},
            {"drop_zero_jumps", spec.drop_zero_jumps}};
}

std::string config_hash(const ExperimentSpec& spec)
{
    return hex64(fnv1a(to_json(spec).dump()));
}

Dataset subsample_users(const Dataset& data, std::size_t n, RandomStream& rng, bool prune_catalog)
{
    auto users = data.active_users();
    if (n > users.size())
        throw std::invalid_argument("subsample of " + std::to_string(n) + " users exceeds the " +
                                    std::to_string(users.size()) + " available");
    if (n == users.size() && !prune_catalog)
        return data;
    rng.shuffle(std::span(users));
    std::vector<char> keep(data.users().size(), 0);
    for (std::size_t i = 0; i < n; ++i)
        keep[users[i]] = 1;
    std::vector<VisitEvent> events;
    for (const VisitEvent& e : data.events())
        if (keep[e.user])
            events.push_back(e);
    auto sampled = data.with_events(std::move(events));
    return prune_catalog ? sampled.compacted() : sampled;
}

Dataset prepare_dataset(const ExperimentSpec& spec, LoadReport* report)
{
    if (spec.checkins.empty())
        throw std::invalid_argument("no check-in file given");
    LoadOptions options;
    options.format = spec.format;
    Dataset data = load_checkins(spec.checkins, options, report);
    if (!spec.hierarchy.empty())
        data = apply_hierarchy(data, load_category_hierarchy(spec.hierarchy));
    data = preprocess(data, spec.excluded);
    if (spec.user_subsample) {
        RandomStream rng(derive_seed(spec.simulation.seed, "subsample"));
        data = subsample_users(data, *spec.user_subsample, rng, spec.prune_catalog);
    }
    return data;
}

engine::World build_world(const ExperimentSpec& spec, const Dataset& data)
{
    engine::WorldOptions options;
    options.split = spec.split;
    options.drop_zero_jumps = spec.drop_zero_jumps;
    return engine::build_world(data, options);
}

std::vector<EvaluationRow> evaluate_recommenders(const engine::World& world,
                                                 const std::vector<std::string>& algorithms,
                                                 const recsys::TrainingOptions& training,
                                                 std::uint64_t seed, std::size_t k)
{
    std::vector<EvaluationRow> rows;
    for (const auto& algorithm : algorithms) {
        EvaluationRow row{algorithm, {}, {}};
        try {
            RandomStream rng(derive_seed(seed, "evaluate:" + algorithm));
            const auto model =
                recsys::retrain(algorithm, world.train.events(), {}, world.train.users().size(),
                                world.catalog, training, rng);
            row.result = recsys::evaluate(model, world.post.events(), *world.catalog, k);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_evaluation_csv(const std::vector<EvaluationRow>& rows, std::ostream& out)
{
    out << "algorithm,hitrate_at_20,mrr_at_20,evaluated_visits,skipped_visits\n";
    for (const auto& row : rows) {
        out << csv::escape(row.algorithm) << ',';
        if (row.error.empty())
            out << csv::format_double(row.result.hit_rate) << ','
                << csv::format_double(row.result.mrr) << ',' << row.result.evaluated << ','
                << row.result.skipped << '\n';
        else
            out << ",,,\n";
    }
}

std::string cell_name(const engine::SweepCell& cell)
{
    return "eta" + csv::format_double(cell.eta) + "_" + cell.algorithm + "_r" +
           std::to_string(cell.replicate);
}

std::vector<std::string> write_run_outputs(const fs::path& out_dir, const std::string& name,
                                           const engine::World& world,
                                           const engine::SimulationResult& result,
                                           const metrics::RunMetrics& run_metrics,
                                           const engine::SimulationConfig& config)
{
    std::vector<std::string> written;
    auto emit = [&](const std::string& rel, const std::string& text) {
        write_file(out_dir / rel, text);
        written.push_back(rel);
    };

    nlohmann::json m = metrics::to_json(run_metrics);
    m["eta"] = config.eta;
    m["algorithm"] = config.algorithm;
    m["seed"] = config.seed;
    m["population"] = "simulated";
    emit("metrics/" + name + ".json", dump(m));

    nlohmann::json meta = engine::run_metadata(result, config);
    emit("runs/" + name + ".json", dump(meta));

    std::ostringstream visits;
    engine::write_visits_csv(result, world, visits);
    emit("visits/" + name + ".csv", visits.str());

    const auto events = result.events();
    if (events.empty())
        return written;
    const auto counts = metrics::venue_visit_counts(events);
    std::vector<double> x;
    for (const auto& [v, n] : counts)
        x.push_back(n);

    std::ostringstream lorenz;
    lorenz << "venue_share,visit_share\n";
    for (const auto& p : metrics::lorenz(x))
        lorenz << csv::format_double(p.venue_share) << ',' << csv::format_double(p.visit_share)
               << '\n';
    emit("plotdata/" + name + "_lorenz.csv", lorenz.str());

    std::ostringstream ranks;
    ranks << "rank,venue_id,visits\n";
    for (const auto& r : metrics::rank_size(counts))
        ranks << r.rank << ',' << csv::escape(world.catalog->venue(r.venue).id) << ','
              << csv::format_double(r.visits) << '\n';
    emit("plotdata/" + name + "_rank_size.csv", ranks.str());

    const auto net = metrics::colocation(events, result.epochs(), false);
    const auto degrees = net.degrees();
    std::ostringstream hist;
    hist << "degree,nodes,fraction\n";
    for (const auto& [k, p] : metrics::degree_distribution(degrees))
        hist << k << ',' << std::count(degrees.begin(), degrees.end(), k) << ','
             << csv::format_double(p) << '\n';
    emit("plotdata/" + name + "_degree.csv", hist.str());

    try {
        const auto report = metrics::decile_report(
            world.train.events(), metrics::exploration_pairs(world.train.events(), events));
        std::ostringstream dec;
        dec << "decile,venues,train_share,exploration_share,delta\n";
        for (std::size_t g = 0; g < metrics::decile_count; ++g)
            dec << g + 1 << ',' << report.venues[g].size() << ','
                << csv::format_double(report.train_share[g]) << ','
                << csv::format_double(report.exploration_share[g]) << ','
                << csv::format_double(report.delta[g]) << '\n';
        emit("plotdata/" + name + "_deciles.csv", dec.str());
    } catch (const DomainError&) {
        // Too few eligible venues or no exploration; the file is omitted.
    }
    return written;
}

int run_experiment(const ExperimentSpec& spec)
{
    spec.validate();
    const Dataset data = prepare_dataset(spec);
    const engine::World world = build_world(spec, data);

    engine::SweepOptions options;
    options.etas = spec.etas;
    options.algorithms = spec.algorithms;
    options.runs = spec.runs;
    options.cell_workers = spec.cell_workers;
    const auto outcomes = engine::sweep(world, spec.simulation, options);

    std::ostringstream jumps;
    jumps << "jump_km\n";
    for (double d : world.jumps.samples())
        jumps << csv::format_double(d) << '\n';
    write_file(spec.out_dir / "plotdata/jump_lengths.csv", jumps.str());

    nlohmann::json cells = nlohmann::json::array();
    std::size_t failed = 0;
    for (const auto& o : outcomes) {
        const std::string name = cell_name(o.cell);
        nlohmann::json entry = {{"name", name},
                                {"eta", o.cell.eta},
                                {"algorithm", o.cell.algorithm},
                                {"replicate", o.cell.replicate},
                                {"seed", o.cell.seed}};
        if (o.ok()) {
            engine::SimulationConfig config = spec.simulation;
            config.eta = o.cell.eta;
            config.algorithm = o.cell.algorithm;
            config.seed = o.cell.seed;
            entry["status"] = "ok";
            entry["files"] =
                write_run_outputs(spec.out_dir, name, world, *o.result, *o.metrics, config);
        } else {
            ++failed;
            entry["status"] = "failed";
            entry["error"] = o.error;
            std::cerr << "cell " << name << " failed: " << o.error << '\n';
        }
        cells.push_back(std::move(entry));
    }

    const auto rows = engine::aggregate(outcomes);
    std::ostringstream agg;
    engine::write_aggregate_csv(rows, agg);
    write_file(spec.out_dir / "aggregate.csv", agg.str());

    const nlohmann::json manifest = {
        {"format", "urbanloop-manifest"},
        {"version", 1},
        {"config_hash", config_hash(spec)},
        {"spec", to_json(spec)},
        {"dataset",
         {{"users", data.active_users().size()},
          {"venues", data.catalog().size()},
          {"train_events", world.train.size()},
          {"post_events", world.post.size()},
          {"jump_samples", world.jumps.size()},
          {"r_star_km", world.r_star_km}}},
        {"cells", cells},
        {"failed_cells", failed}};
    write_file(spec.out_dir / "manifest.json", dump(manifest));
    return failed == 0 ? 0 : 1;
}

} // namespace urbanloop::cli
