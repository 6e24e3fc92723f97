#pragma once

#include "urbanloop/common/random.hpp"
#include "urbanloop/geo/geo.hpp"
#include "urbanloop/ingest/catalog.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>

namespace urbanloop::mobility {

/// Visit counts of one user.
class UserHistory
{
public:
    void add(VenueIndex v, std::uint32_t times = 1);
    std::uint32_t count(VenueIndex v) const;
    bool contains(VenueIndex v) const { return counts_.contains(v); }
    std::size_t distinct_count() const { return counts_.size(); }
    const std::map<VenueIndex, std::uint32_t>& counts() const { return counts_; }

private:
    std::map<VenueIndex, std::uint32_t> counts_;
};

enum class ExplorationMode
{
    fixed_global,
    per_user,
};

struct ExplorationPolicy
{
    ExplorationMode mode = ExplorationMode::fixed_global;
    double rho = 0.6;
    double gamma = 0.21;
};

std::string_view to_string(ExplorationMode mode);
/// Accepts "fixed", "fixed_global", "peruser", "per_user".
ExplorationMode parse_exploration_mode(std::string_view text);

/// fixed_global: rho * |V|^-gamma; per_user: rho * S^-gamma with S = 0 read
/// as 1. Clamped to [0, 1].
double exploration_probability(const ExplorationPolicy& policy, std::size_t catalog_size,
                               const UserHistory& history);

/// History venues of the category, drawn proportionally to visit count.
std::optional<VenueIndex> preferential_return(const UserHistory& history, CategoryIndex category,
                                              const Catalog& catalog, RandomStream& rng);

/// Same over every category of a first-level group.
std::optional<VenueIndex> preferential_return_group(const UserHistory& history, GroupIndex group,
                                                    const Catalog& catalog, RandomStream& rng);

/// Unvisited candidates (other than current) drawn proportionally to
/// relevance, or uniformly when every remaining relevance is zero.
std::optional<VenueIndex> explore(std::span<const VenueIndex> candidates,
                                  const UserHistory& history,
                                  std::span<const std::uint32_t> relevance, RandomStream& rng,
                                  std::optional<VenueIndex> current = std::nullopt);

enum class DecisionMode : std::uint8_t
{
    rec,
    return_,
    explore,
    fallback_first_level,
    fallback_nearest,
    fallback_to_explore,
    degenerate,
};

inline constexpr std::size_t decision_mode_count = 7;

std::string_view to_string(DecisionMode mode);
DecisionMode parse_decision_mode(std::string_view text);

struct Choice
{
    VenueIndex venue = 0;
    DecisionMode mode = DecisionMode::degenerate;

    friend bool operator==(const Choice&, const Choice&) = default;
};

/// Everything a selection step knows about where the user stands.
struct SelectionContext
{
    CategoryIndex category = 0;
    VenueIndex current = 0;
    double radius_km = 0.0;
    /// V_{c,r}: venues of the category within the radius of current.
    std::span<const VenueIndex> candidates;
};

enum class FallbackStage
{
    explore,
    return_,
};

/// Recovery after the primary choice came back empty.
///
/// explore: explore over the first-level group within the radius, then the
/// nearest venue of the category other than current.
/// return_: preferential return over the first-level group, then explore over
/// the candidates, then the explore chain.
/// With no way out, returns current tagged degenerate.
Choice fallback(FallbackStage stage, const SelectionContext& context,
                const geo::SpatialIndex& index, const UserHistory& history,
                std::span<const std::uint32_t> relevance, RandomStream& rng);

} // namespace urbanloop::mobility
