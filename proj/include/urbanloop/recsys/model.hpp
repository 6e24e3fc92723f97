#pragma once

#include "urbanloop/common/random.hpp"
#include "urbanloop/ingest/catalog.hpp"
#include "urbanloop/ingest/dataset.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace urbanloop::recsys {

/// Where and when a user asks for a recommendation.
struct ScoringContext
{
    std::optional<LatLon> position;
    Timestamp time = 0;
};

/// Learned state of one recommender kind. Implementations are immutable once
/// trained, so score() may be called from many threads at once.
class Scorer
{
public:
    virtual ~Scorer() = default;

    virtual std::string_view kind() const = 0;

    /// Writes one raw score per candidate into out (same length).
    virtual void score(UserIndex user, std::span<const VenueIndex> candidates,
                       const ScoringContext& context, std::span<double> out) const = 0;

    virtual nlohmann::json to_json() const = 0;
};

/// Per-venue distinct-visitor counts. Backs the Popularity kind and is the
/// cold-start scorer of every model.
class PopularityScorer final : public Scorer
{
public:
    PopularityScorer() = default;
    explicit PopularityScorer(std::vector<std::uint32_t> visitors) : visitors_(std::move(visitors))
    {
    }

    std::string_view kind() const override { return "Popularity"; }
    void score(UserIndex user, std::span<const VenueIndex> candidates,
               const ScoringContext& context, std::span<double> out) const override;
    nlohmann::json to_json() const override;

    double visitors(VenueIndex v) const { return v < visitors_.size() ? visitors_[v] : 0.0; }
    const std::vector<std::uint32_t>& counts() const { return visitors_; }

private:
    std::vector<std::uint32_t> visitors_;
};

struct TrainingReport
{
    std::size_t epochs = 0;
    bool early_stopped = false;
    /// Mean per-sample loss of each epoch (empty for non-iterative kinds).
    std::vector<double> epoch_losses;
};

/// A trained recommender: its scorer plus the popularity fallback used for
/// users the scorer never saw.
class Model
{
public:
    Model(std::shared_ptr<const Scorer> scorer, std::shared_ptr<const PopularityScorer> popularity,
          std::vector<char> known_users, TrainingReport report = {});

    std::string_view kind() const { return scorer_->kind(); }
    const Scorer& scorer() const { return *scorer_; }
    const PopularityScorer& popularity() const { return *popularity_; }
    bool knows(UserIndex u) const { return u < known_.size() && known_[u]; }
    const std::vector<char>& known_users() const { return known_; }
    const TrainingReport& report() const { return report_; }

private:
    std::shared_ptr<const Scorer> scorer_;
    std::shared_ptr<const PopularityScorer> popularity_;
    std::vector<char> known_;
    TrainingReport report_;
};

struct ScoredCandidates
{
    std::vector<VenueIndex> venues;
    std::vector<double> raw;
    /// Min-max scaled over the candidate set.
    std::vector<double> normalized;
    /// True when the user was unknown and popularity scored instead.
    bool used_fallback = false;
};

/// Min-max scaling to [0, 1]. When every value is equal the mass is spread
/// uniformly: each entry becomes 1/n.
std::vector<double> min_max_normalize(std::span<const double> values);

/// Throws std::invalid_argument on an empty candidate set.
ScoredCandidates score(const Model& model, UserIndex user, std::span<const VenueIndex> candidates,
                       const ScoringContext& context = {});

/// Keeps the top-k by normalized score (ties by ascending venue index) and
/// draws one with probability proportional to its normalized score, or
/// uniformly when all kept scores are zero.
VenueIndex choose(const ScoredCandidates& scored, std::size_t k, RandomStream& rng);

/// score() followed by choose().
VenueIndex recommend(const Model& model, UserIndex user, std::span<const VenueIndex> candidates,
                     std::size_t k, RandomStream& rng, const ScoringContext& context = {});

} // namespace urbanloop::recsys
