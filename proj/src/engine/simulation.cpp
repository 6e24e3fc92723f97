#include "urbanloop/engine/engine.hpp"

#include "urbanloop/common/csv.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace urbanloop::engine {

World build_world(const Dataset& data, const WorldOptions& options)
{
    options.split.validate();
    World w;
    w.catalog = data.catalog_ptr();
    auto parts = split(data, options.split);
    w.train = std::move(parts.train);
    w.post = std::move(parts.post);
    w.index = std::make_shared<const geo::SpatialIndex>(w.catalog, options.cell_km);
    w.jumps = geo::build_jump_distribution(data, options.drop_zero_jumps);
    w.r_star_km = w.jumps.median();
    w.relevance = geo::relevance_all(*w.index, w.r_star_km);
    return w;
}

std::string_view to_string(AnchorMode mode)
{
    return mode == AnchorMode::trace ? "trace" : "simulated";
}

AnchorMode parse_anchor_mode(std::string_view text)
{
    if (text == "trace")
        return AnchorMode::trace;
    if (text == "simulated")
        return AnchorMode::simulated;
    throw std::invalid_argument("unknown anchor mode '" + std::string(text) + "'");
}

void SimulationConfig::validate() const
{
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("eta must lie in [0, 1]");
    if (!(delta_days > 0.0) || !std::isfinite(delta_days))
        throw std::invalid_argument("delta_days must be positive");
    if (top_k == 0)
        throw std::invalid_argument("top_k must be at least 1");
    if (workers == 0)
        throw std::invalid_argument("workers must be at least 1");
    if (!(policy.rho >= 0.0) || !std::isfinite(policy.gamma))
        throw std::invalid_argument("exploration policy needs rho >= 0 and finite gamma");
    if (!recsys::RecommenderRegistry::instance().contains(algorithm))
        throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
}

nlohmann::json to_json(const SimulationConfig& c)
{
    const auto& t = c.training;
    return {{"eta", c.eta},
            {"delta_days", c.delta_days},
            {"algorithm", c.algorithm},
            {"top_k", c.top_k},
            {"exploration_mode", std::string(mobility::to_string(c.policy.mode))},
            {"rho", c.policy.rho},
            {"gamma", c.policy.gamma},
            {"anchor", std::string(to_string(c.anchor))},
            {"seed", c.seed},
            {"training",
             {{"neighbors", t.neighbors},
              {"factors", t.factors},
              {"learning_rate", t.learning_rate},
              {"l2", t.l2},
              {"batch_size", t.batch_size},
              {"max_epochs", t.max_epochs},
              {"patience", t.patience},
              {"min_delta", t.min_delta},
              {"init_range", t.init_range}}}};
}

std::vector<Window> retraining_windows(std::span<const VisitEvent> post, Timestamp last_train_time,
                                       double delta_days)
{
    const Timestamp delta = days_to_seconds(delta_days);
    std::vector<Window> out;
    Timestamp t_last = last_train_time;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < post.size(); ++i) {
        if (post[i].time - t_last > delta) {
            out.push_back({begin, i + 1});
            begin = i + 1;
            t_last = post[i].time;
        }
    }
    // A trigger on the final event closes the last window; no retrain follows.
    if (begin < post.size() || out.empty())
        out.push_back({begin, post.size()});
    return out;
}

std::vector<VisitEvent> SimulationResult::events() const
{
    std::vector<VisitEvent> out;
    out.reserve(visits.size());
    for (const auto& v : visits)
        out.push_back(v.event);
    return out;
}

std::vector<std::size_t> SimulationResult::epochs() const
{
    std::vector<std::size_t> out;
    out.reserve(visits.size());
    for (const auto& v : visits)
        out.push_back(v.epoch);
    return out;
}

mobility::Choice select_venue(const World& world, const recsys::Model& model,
                              const SimulationConfig& config, UserIndex user, VenueIndex anchor,
                              Timestamp time, CategoryIndex category,
                              mobility::UserHistory& history, RandomStream& rng,
                              SelectionTrace* trace)
{
    using mobility::DecisionMode;
    using mobility::FallbackStage;

    const Catalog& catalog = *world.catalog;
    const double r = world.jumps.sample(rng);
    const LatLon center = catalog.position(anchor);
    const auto candidates = world.index->within(center, r, category);
    const mobility::SelectionContext ctx{category, anchor, r, candidates};

    SelectionTrace local;
    SelectionTrace& tr = trace ? *trace : local;
    tr = SelectionTrace{};
    tr.radius_km = r;
    tr.candidates = candidates.size();

    mobility::Choice choice;
    if (rng.bernoulli(config.eta)) {
        tr.followed_recommender = true;
        if (candidates.empty())
            choice = mobility::fallback(FallbackStage::explore, ctx, *world.index, history,
                                        world.relevance, rng);
        else
            choice = {recsys::recommend(model, user, candidates, config.top_k, rng,
                                        recsys::ScoringContext{center, time}),
                      DecisionMode::rec};
    } else {
        tr.p_explore = mobility::exploration_probability(config.policy, catalog.size(), history);
        tr.explored = rng.bernoulli(*tr.p_explore);
        if (tr.explored) {
            if (const auto v = mobility::explore(candidates, history, world.relevance, rng, anchor))
                choice = {*v, DecisionMode::explore};
            else
                choice = mobility::fallback(FallbackStage::explore, ctx, *world.index, history,
                                            world.relevance, rng);
        } else {
            if (const auto v = mobility::preferential_return(history, category, catalog, rng))
                choice = {*v, DecisionMode::return_};
            else
                choice = mobility::fallback(FallbackStage::return_, ctx, *world.index, history,
                                            world.relevance, rng);
        }
    }
    history.add(choice.venue);
    return choice;
}

namespace {

// Runs body(i) for i in [0, n) on up to `workers` threads and rethrows the
// first failure.
template <typename Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body)
{
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < std::min(workers, n); ++t)
        threads.emplace_back(work);
    threads.clear();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace

SimulationResult run_simulation(const World& world, const SimulationConfig& config)
{
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    const Catalog& catalog = *world.catalog;
    const std::size_t user_space = world.train.users().size();
    const auto train_events = world.train.events();
    const auto post = world.post.events();

    SimulationResult result;
    const Timestamp t_last =
        !train_events.empty() ? train_events.back().time : (post.empty() ? 0 : post.front().time);
    result.windows = retraining_windows(post, t_last, config.delta_days);

    std::vector<mobility::UserHistory> histories(user_space);
    for (const VisitEvent& e : train_events)
        histories[e.user].add(e.venue);
    std::vector<std::optional<VenueIndex>> last_simulated(user_space);
    std::vector<std::optional<RandomStream>> streams(user_space);
    for (const VisitEvent& e : post)
        if (!streams[e.user])
            streams[e.user].emplace(derive_seed(config.seed, "user", e.user));

    result.visits.resize(post.size());
    std::vector<VisitEvent> simulated;
    simulated.reserve(post.size());

    RandomStream train_rng(derive_seed(config.seed, "train", 0));
    recsys::Model model = recsys::retrain(config.algorithm, train_events, {}, user_space,
                                          world.catalog, config.training, train_rng);

    for (std::size_t w = 0; w < result.windows.size(); ++w) {
        const Window window = result.windows[w];
        std::map<UserIndex, std::vector<std::size_t>> by_user;
        for (std::size_t i = window.begin; i < window.end; ++i)
            by_user[post[i].user].push_back(i);
        std::vector<const std::pair<const UserIndex, std::vector<std::size_t>>*> jobs;
        for (const auto& entry : by_user)
            jobs.push_back(&entry);

        parallel_for(jobs.size(), config.workers, [&](std::size_t j) {
            const UserIndex u = jobs[j]->first;
            RandomStream& rng = *streams[u];
            for (std::size_t i : jobs[j]->second) {
                const VisitEvent& real = post[i];
                const VenueIndex anchor = config.anchor == AnchorMode::trace
                                              ? real.venue
                                              : last_simulated[u].value_or(real.venue);
                const auto choice = select_venue(world, model, config, u, anchor, real.time,
                                                 catalog.category_of(real.venue), histories[u], rng);
                last_simulated[u] = choice.venue;
                result.visits[i] = SimulatedVisit{
                    VisitEvent{u, choice.venue, real.time, real.tz_offset_minutes}, choice.mode, w};
            }
        });

        for (std::size_t i = window.begin; i < window.end; ++i)
            simulated.push_back(result.visits[i].event);
        if (w + 1 < result.windows.size()) {
            RandomStream rng(derive_seed(config.seed, "train", w + 1));
            model = recsys::retrain(config.algorithm, train_events, simulated, user_space,
                                    world.catalog, config.training, rng);
            ++result.retrain_count;
        }
    }

    for (const auto& v : result.visits)
        ++result.mode_counts[static_cast<std::size_t>(v.mode)];
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

void write_visits_csv(const SimulationResult& result, const World& world, std::ostream& out)
{
    const Catalog& catalog = *world.catalog;
    const UserTable& users = world.post.users();
    out << "user_id,venue_id,category,lat,lon,timestamp_iso8601,mode,epoch_index\n";
    for (const SimulatedVisit& v : result.visits) {
        const Venue& venue = catalog.venue(v.event.venue);
        out << csv::escape(users.id(v.event.user)) << ',' << csv::escape(venue.id) << ','
            << csv::escape(venue.category) << ',' << csv::format_double(venue.position.lat) << ','
            << csv::format_double(venue.position.lon) << ',' << format_iso8601(v.event.time) << ','
            << mobility::to_string(v.mode) << ',' << v.epoch << '\n';
    }
}

nlohmann::json run_metadata(const SimulationResult& result, const SimulationConfig& config)
{
    nlohmann::json modes = nlohmann::json::object();
    for (std::size_t m = 0; m < mobility::decision_mode_count; ++m)
        modes[std::string(mobility::to_string(static_cast<mobility::DecisionMode>(m)))] =
            result.mode_counts[m];
    return {{"config", to_json(config)},
            {"seed", config.seed},
            {"visits", result.visits.size()},
            {"windows", result.windows.size()},
            {"retrain_count", result.retrain_count},
            {"mode_counts", modes},
            {"wall_seconds", result.wall_seconds}};
}

} // namespace urbanloop::engine
