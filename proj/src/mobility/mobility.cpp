#include "urbanloop/mobility/mobility.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace urbanloop::mobility {

void UserHistory::add(VenueIndex v, std::uint32_t times)
{
    if (times == 0)
        throw std::invalid_argument("UserHistory::add: zero visits");
    counts_[v] += times;
}

std::uint32_t UserHistory::count(VenueIndex v) const
{
    const auto it = counts_.find(v);
    return it == counts_.end() ? 0 : it->second;
}

std::string_view to_string(ExplorationMode mode)
{
    return mode == ExplorationMode::fixed_global ? "fixed_global" : "per_user";
}

ExplorationMode parse_exploration_mode(std::string_view text)
{
    if (text == "fixed" || text == "fixed_global")
        return ExplorationMode::fixed_global;
    if (text == "peruser" || text == "per_user")
        return ExplorationMode::per_user;
    throw std::invalid_argument("unknown exploration mode '" + std::string(text) + "'");
}

double exploration_probability(const ExplorationPolicy& policy, std::size_t catalog_size,
                               const UserHistory& history)
{
    std::size_t base = 0;
    if (policy.mode == ExplorationMode::fixed_global) {
        if (catalog_size == 0)
            throw std::invalid_argument("exploration_probability: empty catalog");
        base = catalog_size;
    } else {
        base = std::max<std::size_t>(1, history.distinct_count());
    }
    const double p = policy.rho * std::pow(static_cast<double>(base), -policy.gamma);
    return std::clamp(p, 0.0, 1.0);
}

namespace {

template <typename Keep>
std::optional<VenueIndex> proportional_return(const UserHistory& history, Keep&& keep,
                                              RandomStream& rng)
{
    std::vector<VenueIndex> venues;
    std::vector<double> weights;
    for (const auto& [v, n] : history.counts())
        if (keep(v)) {
            venues.push_back(v);
            weights.push_back(static_cast<double>(n));
        }
    if (venues.empty())
        return std::nullopt;
    return venues[rng.weighted(weights)];
}

} // namespace

std::optional<VenueIndex> preferential_return(const UserHistory& history, CategoryIndex category,
                                              const Catalog& catalog, RandomStream& rng)
{
    return proportional_return(
        history, [&](VenueIndex v) { return catalog.category_of(v) == category; }, rng);
}

std::optional<VenueIndex> preferential_return_group(const UserHistory& history, GroupIndex group,
                                                    const Catalog& catalog, RandomStream& rng)
{
    return proportional_return(
        history,
        [&](VenueIndex v) { return catalog.group_of(catalog.category_of(v)) == group; }, rng);
}

std::optional<VenueIndex> explore(std::span<const VenueIndex> candidates,
                                  const UserHistory& history,
                                  std::span<const std::uint32_t> relevance, RandomStream& rng,
                                  std::optional<VenueIndex> current)
{
    std::vector<VenueIndex> open;
    std::vector<double> weights;
    double total = 0.0;
    for (VenueIndex v : candidates) {
        if (history.contains(v) || v == current)
            continue;
        open.push_back(v);
        weights.push_back(static_cast<double>(relevance[v]));
        total += weights.back();
    }
    if (open.empty())
        return std::nullopt;
    return open[total > 0.0 ? rng.weighted(weights) : rng.index(open.size())];
}

namespace {

constexpr std::array<std::string_view, decision_mode_count> mode_names = {
    "rec",      "return", "explore", "fallback_first_level", "fallback_nearest",
    "fallback_to_explore", "degenerate"};

Choice explore_chain(const SelectionContext& ctx, const geo::SpatialIndex& index,
                     const UserHistory& history, std::span<const std::uint32_t> relevance,
                     RandomStream& rng)
{
    const Catalog& catalog = index.catalog();
    if (const auto group = catalog.group_of(ctx.category)) {
        const auto pool = index.within_group(catalog.position(ctx.current), ctx.radius_km, *group);
        if (const auto v = explore(pool, history, relevance, rng, ctx.current))
            return {*v, DecisionMode::fallback_first_level};
    }
    if (const auto v = index.nearest(catalog.position(ctx.current), ctx.category, ctx.current))
        return {*v, DecisionMode::fallback_nearest};
    return {ctx.current, DecisionMode::degenerate};
}

} // namespace

std::string_view to_string(DecisionMode mode)
{
    return mode_names[static_cast<std::size_t>(mode)];
}

DecisionMode parse_decision_mode(std::string_view text)
{
    for (std::size_t i = 0; i < mode_names.size(); ++i)
        if (mode_names[i] == text)
            return static_cast<DecisionMode>(i);
    throw std::invalid_argument("unknown decision mode '" + std::string(text) + "'");
}

Choice fallback(FallbackStage stage, const SelectionContext& ctx, const geo::SpatialIndex& index,
                const UserHistory& history, std::span<const std::uint32_t> relevance,
                RandomStream& rng)
{
    if (stage == FallbackStage::explore)
        return explore_chain(ctx, index, history, relevance, rng);

    const Catalog& catalog = index.catalog();
    if (const auto group = catalog.group_of(ctx.category))
        if (const auto v = preferential_return_group(history, *group, catalog, rng))
            return {*v, DecisionMode::fallback_first_level};
    if (const auto v = explore(ctx.candidates, history, relevance, rng, ctx.current))
        return {*v, DecisionMode::fallback_to_explore};
    const Choice c = explore_chain(ctx, index, history, relevance, rng);
    return c.mode == DecisionMode::degenerate ? c : Choice{c.venue, DecisionMode::fallback_to_explore};
}

} // namespace urbanloop::mobility
