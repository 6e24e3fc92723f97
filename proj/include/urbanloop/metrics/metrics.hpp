#pragma once

#include "urbanloop/common/time.hpp"
#include "urbanloop/ingest/dataset.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace urbanloop::metrics {

/// Gini coefficient from the ascending-rank formula. Throws DomainError when
/// the vector is empty or sums to zero, std::invalid_argument on a negative
/// or non-finite entry.
double gini(std::span<const double> counts);

/// Visits per visited venue, ascending venue.
std::vector<std::pair<VenueIndex, double>> venue_visit_counts(std::span<const VisitEvent> visits);

/// Gini over the visit counts of visited venues.
double collective_gini(std::span<const VisitEvent> visits);

/// Mean over users of the gini of their own venue counts. Throws DomainError
/// on an empty visit set.
double mean_individual_gini(std::span<const VisitEvent> visits);

struct LorenzPoint
{
    double venue_share = 0.0;
    double visit_share = 0.0;
};

/// From (0, 0) to (1, 1) over counts sorted ascending.
std::vector<LorenzPoint> lorenz(std::span<const double> counts);

struct RankSize
{
    std::size_t rank = 0;
    VenueIndex venue = 0;
    double visits = 0.0;
};

/// Most visited first; ties by ascending venue.
std::vector<RankSize> rank_size(std::span<const std::pair<VenueIndex, double>> counts);

struct Witness
{
    VenueIndex venue = 0;
    std::size_t epoch = 0;

    friend bool operator==(const Witness&, const Witness&) = default;
    friend auto operator<=>(const Witness&, const Witness&) = default;
};

struct Edge
{
    UserIndex a = 0;
    UserIndex b = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Users linked by a shared venue within one epoch, unioned over epochs.
struct ColocationNetwork
{
    /// Ascending.
    std::vector<UserIndex> nodes;
    /// a < b, ascending.
    std::vector<Edge> edges;
    /// Parallel to edges; each list ascending. Empty when not collected.
    std::vector<std::vector<Witness>> witnesses;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }
    /// Parallel to nodes.
    std::vector<std::size_t> degrees() const;
};

/// epoch_of[i] labels visits[i].
ColocationNetwork colocation(std::span<const VisitEvent> visits,
                             std::span<const std::size_t> epoch_of, bool keep_witnesses = true);

/// Closed time windows [first, second]; visits outside every window are
/// ignored. Windows must be ordered and non-overlapping.
ColocationNetwork colocation(std::span<const VisitEvent> visits,
                             std::span<const std::pair<Timestamp, Timestamp>> windows,
                             bool keep_witnesses = true);

/// Fraction of nodes per degree, k >= 1 ascending.
std::vector<std::pair<std::size_t, double>> degree_distribution(std::span<const std::size_t> degrees);

/// |slope| of the least-squares line through (ln k, ln P(k)). Throws
/// DomainError with fewer than two distinct positive degrees.
double degree_slope(std::span<const std::size_t> degrees);
double degree_slope(const ColocationNetwork& net);

/// Edge density among the h highest-degree nodes (ties by ascending user).
/// Throws DomainError if the network has fewer than h nodes or h < 2.
double richclub_density(const ColocationNetwork& net, std::size_t h = 15);
/// Edge density among the remaining nodes; edges touching the rich club are
/// not counted. Zero when fewer than two nodes remain.
double peripheral_density(const ColocationNetwork& net, std::size_t h = 15);

/// Median node degree, averaging the two middle values for even counts.
double median_degree(const ColocationNetwork& net);

/// Binary (user, venue) pairs of simulated visits to venues the user never
/// visited in train, ascending.
std::vector<std::pair<UserIndex, VenueIndex>>
exploration_pairs(std::span<const VisitEvent> train, std::span<const VisitEvent> simulated);

inline constexpr std::size_t decile_count = 10;

struct DecileReport
{
    /// Decile g (0-based here, lowest popularity first), venues ascending.
    std::array<std::vector<VenueIndex>, decile_count> venues;
    std::array<double, decile_count> train_share{};
    std::array<double, decile_count> exploration_share{};
    std::array<double, decile_count> delta{};
};

/// Venues with fewer than min_visitors distinct train visitors are excluded.
/// Throws DomainError with fewer than ten eligible venues or no exploration
/// pair on an eligible venue.
DecileReport decile_report(std::span<const VisitEvent> train,
                           std::span<const std::pair<UserIndex, VenueIndex>> exploration,
                           std::size_t min_visitors = 3);

/// Per-run summary. Network statistics are empty when undefined on the run.
struct RunMetrics
{
    double mean_individual_gini = 0.0;
    double collective_gini = 0.0;
    std::optional<double> alpha;
    std::optional<double> richclub_density;
    std::optional<double> peripheral_density;
    std::optional<double> median_degree;
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
};

RunMetrics run_metrics(std::span<const VisitEvent> visits, std::span<const std::size_t> epoch_of,
                       std::size_t h = 15);

/// Keys: mean_individual_gini, collective_gini, alpha, richclub_density,
/// peripheral_density, median_degree, node_count, edge_count (null when
/// undefined).
nlohmann::json to_json(const RunMetrics& m);

} // namespace urbanloop::metrics
