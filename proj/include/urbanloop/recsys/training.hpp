#pragma once

#include "urbanloop/recsys/interactions.hpp"
#include "urbanloop/recsys/model.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace urbanloop::recsys {

/// Training hyperparameters. Defaults are the production settings.
struct TrainingOptions
{
    std::size_t neighbors = 10;
    std::size_t factors = 32;
    double learning_rate = 0.001;
    double l2 = 0.0001;
    std::size_t batch_size = 16;
    std::size_t max_epochs = 500;
    /// Stop after this many epochs without a loss decrease.
    std::size_t patience = 5;
    /// A decrease counts only if it exceeds this.
    double min_delta = 1e-6;
    double init_range = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

struct TrainingInput
{
    std::shared_ptr<const InteractionMatrix> matrix;
    std::shared_ptr<const Catalog> catalog;
    const TrainingOptions& options;
    RandomStream& rng;
};

/// Fits a scorer. Reports iterative progress through the report.
using TrainFunction =
    std::function<std::shared_ptr<const Scorer>(const TrainingInput&, TrainingReport&)>;
/// Rebuilds a scorer from Scorer::to_json() output.
using LoadFunction = std::function<std::shared_ptr<const Scorer>(
    const nlohmann::json&, const std::shared_ptr<const Catalog>&)>;

/// Name -> recommender kind. The built-in kinds are registered on first use;
/// further kinds (neural models, say) plug in through add().
class RecommenderRegistry
{
public:
    static RecommenderRegistry& instance();

    void add(std::string name, TrainFunction train, LoadFunction load);
    bool contains(std::string_view name) const;
    /// Case-insensitive lookup of the registered spelling; throws
    /// std::invalid_argument for unknown kinds.
    std::string canonical_name(std::string_view name) const;
    std::vector<std::string> names() const;

    const TrainFunction& trainer(std::string_view name) const;
    const LoadFunction& loader(std::string_view name) const;

private:
    RecommenderRegistry();

    struct Entry
    {
        TrainFunction train;
        LoadFunction load;
    };
    std::map<std::string, Entry, std::less<>> entries_;
};

/// The six built-in kinds in their usual reporting order.
const std::vector<std::string>& builtin_algorithms();

/// Fits a model on the matrix. Every kind except Popularity throws
/// DomainError on a matrix without positives.
Model train(std::string_view kind, std::shared_ptr<const InteractionMatrix> matrix,
            std::shared_ptr<const Catalog> catalog, const TrainingOptions& options,
            RandomStream& rng);

/// Full refit on base followed by simulated, from fresh parameters.
Model retrain(std::string_view kind, std::span<const VisitEvent> base,
              std::span<const VisitEvent> simulated, std::size_t user_space,
              std::shared_ptr<const Catalog> catalog, const TrainingOptions& options,
              RandomStream& rng);

/// Versioned JSON dump of a model's learned state.
nlohmann::json save_model(const Model& model);
Model load_model(const nlohmann::json& doc, std::shared_ptr<const Catalog> catalog);

} // namespace urbanloop::recsys
