#include "urbanloop/cli/experiment.hpp"
#include "urbanloop/common/csv.hpp"
#include "urbanloop/common/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace urbanloop;

struct Overrides
{
    std::string config;
    std::vector<std::pair<std::string, std::string>> settings;
    std::vector<std::string> raw;
};

void add_setting(CLI::App& app, Overrides& o, const std::string& flag, const std::string& key,
                 const std::string& help)
{
    app.add_option_function<std::string>(
        flag, [&o, key](const std::string& v) { o.settings.emplace_back(key, v); }, help);
}

cli::ExperimentSpec resolve(const Overrides& o)
{
    cli::ExperimentSpec spec;
    if (!o.config.empty())
        cli::load_config(spec, o.config);
    for (const auto& [key, value] : o.settings)
        cli::apply_setting(spec, key, value);
    for (const auto& item : o.raw) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + item + "'");
        cli::apply_setting(spec, item.substr(0, eq), item.substr(eq + 1));
    }
    spec.validate();
    return spec;
}

std::vector<engine::SimulatedVisit> read_visits(const std::string& path, const engine::World& world)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<engine::SimulatedVisit> out;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty())
            continue;
        const auto f = csv::split(line, ',');
        const auto where = " (" + path + " line " + std::to_string(number) + ")";
        if (f.size() != 8)
            throw DataError("expected 8 columns" + where);
        const auto u = world.train.users().find(f[0]);
        const auto v = world.catalog->find(f[1]);
        const auto t = parse_timestamp(f[5]);
        if (!u || !v || !t)
            throw DataError("unknown user, venue or timestamp" + where);
        out.push_back({VisitEvent{*u, *v, *t, 0}, mobility::parse_decision_mode(f[6]),
                       static_cast<std::size_t>(std::stoull(f[7]))});
    }
    return out;
}

int run_metrics_command(const cli::ExperimentSpec& spec, const std::string& visits_path)
{
    const auto data = cli::prepare_dataset(spec);
    const auto world = cli::build_world(spec, data);
    engine::SimulationResult result;
    result.visits = read_visits(visits_path, world);
    const auto metrics = metrics::run_metrics(result.events(), result.epochs());
    engine::SimulationConfig config = spec.simulation;
    config.eta = spec.etas.front();
    config.algorithm = spec.algorithms.front();
    const auto files = cli::write_run_outputs(spec.out_dir, "recomputed", world, result, metrics,
                                              config);
    std::cout << metrics::to_json(metrics).dump(2) << '\n';
    for (const auto& f : files)
        std::cerr << "wrote " << (spec.out_dir / f).string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Recommender feedback-loop simulation over check-in data"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, "key = value configuration file");
    app.add_option("--set", o.raw, "Extra key=value setting (repeatable)");
    add_setting(app, o, "--checkins", "checkins", "Check-in file");
    add_setting(app, o, "--hierarchy", "hierarchy", "Category hierarchy CSV");
    add_setting(app, o, "--format", "format", "foursquare or canonical");
    add_setting(app, o, "--eta", "eta", "Comma-separated adoption rates");
    add_setting(app, o, "--algo", "algo", "Comma-separated recommender kinds");
    add_setting(app, o, "--seed", "seed", "Master seed");
    add_setting(app, o, "--runs", "runs", "Replicates per cell");
    add_setting(app, o, "--subsample", "subsample", "Number of users to sample");
    add_setting(app, o, "--delta-days", "delta_days", "Retraining period in days");
    add_setting(app, o, "--topk", "topk", "Recommendation list length");
    add_setting(app, o, "--anchor", "anchor", "trace or simulated");
    add_setting(app, o, "--explore-mode", "explore_mode", "fixed or peruser");
    add_setting(app, o, "--workers", "workers", "Threads per simulation");
    add_setting(app, o, "--cell-workers", "cell_workers", "Simulations in parallel");
    add_setting(app, o, "--out", "out", "Output directory");

    auto* simulate = app.add_subcommand("simulate", "Run one (eta, algorithm) cell");
    auto* sweep = app.add_subcommand("sweep", "Run the eta x algorithm grid");
    auto* eval = app.add_subcommand("eval", "Offline HitRate@20 / mRR@20 of each algorithm");
    auto* metrics_cmd = app.add_subcommand("metrics", "Recompute metrics from a visits CSV");
    std::string visits_path;
    metrics_cmd->add_option("--visits", visits_path, "Simulated-visit CSV")->required();
    auto* subsample = app.add_subcommand("subsample", "Write a user subsample as canonical CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    cli::ExperimentSpec spec;
    try {
        spec = resolve(o);
        if (simulate->parsed() && (spec.etas.size() != 1 || spec.algorithms.size() != 1))
            throw std::invalid_argument("simulate takes exactly one --eta and one --algo");
    } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (simulate->parsed() || sweep->parsed())
            return cli::run_experiment(spec);
        if (eval->parsed()) {
            const auto data = cli::prepare_dataset(spec);
            const auto world = cli::build_world(spec, data);
            const auto rows = cli::evaluate_recommenders(world, spec.algorithms,
                                                         spec.simulation.training,
                                                         spec.simulation.seed);
            std::ostringstream text;
            cli::write_evaluation_csv(rows, text);
            std::filesystem::create_directories(spec.out_dir);
            std::ofstream(spec.out_dir / "evaluation.csv") << text.str();
            std::cout << text.str();
            int status = 0;
            for (const auto& row : rows)
                if (!row.error.empty()) {
                    std::cerr << row.algorithm << " failed: " << row.error << '\n';
                    status = 1;
                }
            return status;
        }
        if (metrics_cmd->parsed())
            return run_metrics_command(spec, visits_path);
        if (subsample->parsed()) {
            if (!spec.user_subsample)
                throw std::invalid_argument("subsample needs --subsample N");
            const auto data = cli::prepare_dataset(spec);
            std::filesystem::create_directories(spec.out_dir);
            write_canonical(data, spec.out_dir / "checkins.csv");
            std::cout << "wrote " << data.size() << " events of " << data.active_users().size()
                      << " users to " << (spec.out_dir / "checkins.csv").string() << '\n';
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
