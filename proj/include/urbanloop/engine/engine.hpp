#pragma once

#include "urbanloop/geo/geo.hpp"
#include "urbanloop/ingest/preprocess.hpp"
#include "urbanloop/metrics/metrics.hpp"
#include "urbanloop/mobility/mobility.hpp"
#include "urbanloop/recsys/training.hpp"

#include <json.hpp>

#include <array>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace urbanloop::engine {

/// Shared, immutable inputs of every run over one dataset.
struct World
{
    std::shared_ptr<const Catalog> catalog;
    Dataset train;
    Dataset post;
    std::shared_ptr<const geo::SpatialIndex> index;
    geo::JumpDistribution jumps;
    /// Median jump length.
    double r_star_km = 0.0;
    /// Other venues within r_star of each venue.
    std::vector<std::uint32_t> relevance;
};

struct WorldOptions
{
    SplitSpec split;
    bool drop_zero_jumps = false;
    double cell_km = 1.0;
};

/// Splits data and precomputes the spatial quantities. Jump lengths come from
/// the whole of data, not just the train part.
World build_world(const Dataset& data, const WorldOptions& options = {});

enum class AnchorMode
{
    /// The venue of the real event driving the step.
    trace,
    /// The user's previous simulated venue.
    simulated,
};

std::string_view to_string(AnchorMode mode);
AnchorMode parse_anchor_mode(std::string_view text);

struct SimulationConfig
{
    double eta = 0.0;
    double delta_days = 7.0;
    std::string algorithm = "Popularity";
    std::size_t top_k = 20;
    mobility::ExplorationPolicy policy;
    AnchorMode anchor = AnchorMode::trace;
    std::uint64_t seed = 0;
    /// Threads stepping users within a window. Output does not depend on it.
    std::size_t workers = 1;
    recsys::TrainingOptions training;

    /// Throws std::invalid_argument on out-of-range values or an unknown
    /// algorithm.
    void validate() const;
};

nlohmann::json to_json(const SimulationConfig& config);

struct SimulatedVisit
{
    VisitEvent event;
    mobility::DecisionMode mode = mobility::DecisionMode::degenerate;
    std::size_t epoch = 0;

    friend bool operator==(const SimulatedVisit&, const SimulatedVisit&) = default;
};

struct Window
{
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Splits post events into model epochs. A window closes after the first
/// event with t - t_last > delta (then t_last = t); t_last starts at
/// last_train_time. The last window always runs to the end.
std::vector<Window> retraining_windows(std::span<const VisitEvent> post, Timestamp last_train_time,
                                       double delta_days);

struct SimulationResult
{
    std::vector<SimulatedVisit> visits;
    std::vector<Window> windows;
    /// Retrainings after the initial fit.
    std::size_t retrain_count = 0;
    std::array<std::size_t, mobility::decision_mode_count> mode_counts{};
    double wall_seconds = 0.0;

    std::vector<VisitEvent> events() const;
    std::vector<std::size_t> epochs() const;
};

/// What select_venue drew on the way to its choice.
struct SelectionTrace
{
    double radius_km = 0.0;
    std::size_t candidates = 0;
    bool followed_recommender = false;
    /// Exploration probability; only set on the autonomous branch.
    std::optional<double> p_explore;
    bool explored = false;
};

/// One user's decision for one real event.
mobility::Choice select_venue(const World& world, const recsys::Model& model,
                              const SimulationConfig& config, UserIndex user, VenueIndex anchor,
                              Timestamp time, CategoryIndex category,
                              mobility::UserHistory& history, RandomStream& rng,
                              SelectionTrace* trace = nullptr);

/// Replays the post split, replacing each real visit by a simulated one and
/// retraining on train plus the simulated visits at window boundaries.
SimulationResult run_simulation(const World& world, const SimulationConfig& config);

/// user_id,venue_id,category,lat,lon,timestamp_iso8601,mode,epoch_index
void write_visits_csv(const SimulationResult& result, const World& world, std::ostream& out);

/// Config echo, seed, retrain count, per-mode counts, wall time.
nlohmann::json run_metadata(const SimulationResult& result, const SimulationConfig& config);

struct SweepCell
{
    double eta = 0.0;
    std::string algorithm;
    std::size_t replicate = 0;
    std::uint64_t seed = 0;
};

/// Seed of one replicate. Shared across eta and algorithm so that cells of a
/// replicate differ only by their settings.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate);

struct CellOutcome
{
    SweepCell cell;
    std::optional<SimulationResult> result;
    std::optional<metrics::RunMetrics> metrics;
    std::string error;

    bool ok() const { return error.empty(); }
};

struct SweepOptions
{
    std::vector<double> etas;
    std::vector<std::string> algorithms;
    std::size_t runs = 1;
    /// Cells in flight at once.
    std::size_t cell_workers = 1;
    /// Drop the visit lists after computing metrics.
    bool keep_visits = true;
};

/// Runs every (eta, algorithm, replicate) cell in that nesting order.
/// A failing cell is recorded and the others continue.
std::vector<CellOutcome> sweep(const World& world, const SimulationConfig& base,
                               const SweepOptions& options);

struct AggregateRow
{
    double eta = 0.0;
    std::string algorithm;
    std::size_t runs = 0;
    std::size_t failed = 0;
    /// Per metric: mean and population standard deviation over completed runs.
    std::vector<std::pair<std::string, std::pair<double, double>>> stats;
};

std::vector<AggregateRow> aggregate(std::span<const CellOutcome> outcomes);

/// Header then one row per (eta, algorithm).
void write_aggregate_csv(std::span<const AggregateRow> rows, std::ostream& out);

} // namespace urbanloop::engine
