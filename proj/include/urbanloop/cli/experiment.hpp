#pragma once

#include "urbanloop/engine/engine.hpp"
#include "urbanloop/ingest/loader.hpp"
#include "urbanloop/ingest/preprocess.hpp"
#include "urbanloop/recsys/evaluate.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace urbanloop::cli {

struct ExperimentSpec
{
    std::filesystem::path checkins;
    /// Optional second-level -> first-level category map.
    std::filesystem::path hierarchy;
    CheckinFormat format = CheckinFormat::foursquare;
    CategorySet excluded = default_excluded_categories();
    SplitSpec split;
    std::vector<double> etas = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<std::string> algorithms = recsys::builtin_algorithms();
    /// eta, algorithm and seed are overridden per cell; seed is the master.
    engine::SimulationConfig simulation;
    std::size_t runs = 5;
    std::optional<std::size_t> user_subsample;
    /// Shrink the catalog to the sampled users' venues.
    bool prune_catalog = false;
    bool drop_zero_jumps = false;
    std::size_t cell_workers = 1;
    std::filesystem::path out_dir = "out";

    /// Throws std::invalid_argument on an inconsistent spec.
    void validate() const;
};

/// Sets one key (config-file spelling) from its text value. Throws
/// std::invalid_argument on an unknown key or malformed value.
void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value);

/// key = value lines; '#' starts a comment. Later keys win.
std::vector<std::pair<std::string, std::string>> read_config(std::istream& in);
void load_config(ExperimentSpec& spec, const std::filesystem::path& path);

/// Everything that determines outputs; excludes paths and thread counts.
nlohmann::json to_json(const ExperimentSpec& spec);
/// Hex FNV-1a of to_json(spec).
std::string config_hash(const ExperimentSpec& spec);

/// Uniform seeded sample of n active users with all their events. The
/// catalog is kept whole unless prune_catalog is set. Throws
/// std::invalid_argument if n exceeds the active user count.
Dataset subsample_users(const Dataset& data, std::size_t n, RandomStream& rng,
                        bool prune_catalog = false);

/// Load, attach hierarchy, preprocess, subsample.
Dataset prepare_dataset(const ExperimentSpec& spec, LoadReport* report = nullptr);

engine::World build_world(const ExperimentSpec& spec, const Dataset& data);

struct EvaluationRow
{
    std::string algorithm;
    recsys::EvaluationResult result;
    std::string error;
};

/// Trains each algorithm on the train split and scores it on the post split.
std::vector<EvaluationRow> evaluate_recommenders(const engine::World& world,
                                                 const std::vector<std::string>& algorithms,
                                                 const recsys::TrainingOptions& training,
                                                 std::uint64_t seed, std::size_t k = 20);

/// algorithm,hitrate_at_20,mrr_at_20,evaluated_visits,skipped_visits
void write_evaluation_csv(const std::vector<EvaluationRow>& rows, std::ostream& out);

/// File stem of a sweep cell, e.g. "eta0.2_UserKNN_r0".
std::string cell_name(const engine::SweepCell& cell);

/// Writes metrics, visits and plot data of one run under out_dir.
/// Returns the relative paths written.
std::vector<std::string> write_run_outputs(const std::filesystem::path& out_dir,
                                           const std::string& name, const engine::World& world,
                                           const engine::SimulationResult& result,
                                           const metrics::RunMetrics& run_metrics,
                                           const engine::SimulationConfig& config);

/// Sweeps the experiment grid, then writes every artifact. Returns 0 when every
/// cell succeeded, 1 otherwise.
int run_experiment(const ExperimentSpec& spec);

} // namespace urbanloop::cli
