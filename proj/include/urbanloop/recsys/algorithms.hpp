#pragma once

#include "urbanloop/recsys/interactions.hpp"
#include "urbanloop/recsys/model.hpp"

#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace urbanloop::recsys {

/// Cosine similarity of two binary vectors given as ascending index lists.
double cosine_binary(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

struct Neighbor
{
    std::uint32_t index = 0;
    double similarity = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

using NeighborLists = std::vector<std::vector<Neighbor>>;

/// Top-k most cosine-similar users of every user (rows of the matrix),
/// similarity descending, ties by ascending index; zero similarities dropped.
NeighborLists user_neighbors(const InteractionMatrix& m, std::size_t k);

/// Same over venues (columns of the matrix).
NeighborLists venue_neighbors(const InteractionMatrix& m, std::size_t k);

/// score(u, v) = sum over u' in N_k(u) of sim(u, u') * [u' visited v].
class UserKnnScorer final : public Scorer
{
public:
    UserKnnScorer(std::shared_ptr<const InteractionMatrix> matrix, NeighborLists neighbors);

    std::string_view kind() const override { return "UserKNN"; }
    void score(UserIndex user, std::span<const VenueIndex> candidates,
               const ScoringContext& context, std::span<double> out) const override;
    nlohmann::json to_json() const override;

    const NeighborLists& neighbors() const { return neighbors_; }
    const InteractionMatrix& matrix() const { return *matrix_; }

private:
    std::shared_ptr<const InteractionMatrix> matrix_;
    NeighborLists neighbors_;
};

/// score(u, v) = sum over v' in N_k(v) of sim(v, v') * [u visited v'].
class ItemKnnScorer final : public Scorer
{
public:
    ItemKnnScorer(std::shared_ptr<const InteractionMatrix> matrix, NeighborLists neighbors);

    std::string_view kind() const override { return "ItemKNN"; }
    void score(UserIndex user, std::span<const VenueIndex> candidates,
               const ScoringContext& context, std::span<double> out) const override;
    nlohmann::json to_json() const override;

    const NeighborLists& neighbors() const { return neighbors_; }

private:
    std::shared_ptr<const InteractionMatrix> matrix_;
    NeighborLists neighbors_;
};

/// Dense row-major factor matrix.
struct FactorMatrix
{
    std::size_t rows = 0;
    std::size_t dims = 0;
    std::vector<double> values;

    std::span<double> row(std::size_t r) { return {values.data() + r * dims, dims}; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * dims, dims}; }
};

/// score(u, v) = <user factors, venue factors>. Shared by MF and BPRMF.
class FactorScorer final : public Scorer
{
public:
    FactorScorer(std::string kind, FactorMatrix users, FactorMatrix venues);

    std::string_view kind() const override { return kind_; }
    void score(UserIndex user, std::span<const VenueIndex> candidates,
               const ScoringContext& context, std::span<double> out) const override;
    nlohmann::json to_json() const override;

    const FactorMatrix& user_factors() const { return users_; }
    const FactorMatrix& venue_factors() const { return venues_; }

private:
    std::string kind_;
    FactorMatrix users_;
    FactorMatrix venues_;
};

/// Mean of three min-max scaled components: UserKNN, popularity, and
/// 1 / (1 + km from the user's visited-venue centroid).
class PgnScorer final : public Scorer
{
public:
    PgnScorer(std::shared_ptr<const UserKnnScorer> knn,
              std::shared_ptr<const PopularityScorer> popularity,
              std::shared_ptr<const Catalog> catalog, std::vector<std::optional<LatLon>> centroids);

    std::string_view kind() const override { return "PGN"; }
    void score(UserIndex user, std::span<const VenueIndex> candidates,
               const ScoringContext& context, std::span<double> out) const override;
    nlohmann::json to_json() const override;

    const std::vector<std::optional<LatLon>>& centroids() const { return centroids_; }

private:
    std::shared_ptr<const UserKnnScorer> knn_;
    std::shared_ptr<const PopularityScorer> popularity_;
    std::shared_ptr<const Catalog> catalog_;
    std::vector<std::optional<LatLon>> centroids_;
};

/// Mean coordinates of each user's distinct visited venues.
std::vector<std::optional<LatLon>> visited_centroids(const InteractionMatrix& m,
                                                     const Catalog& catalog);

/// Per-sample objectives of the factor models. Losses include the L2 term;
/// gradients are with respect to each factor vector.
namespace objectives {

/// -ln sigma(<u, pos> - <u, neg>) + l2 * (|u|^2 + |pos|^2 + |neg|^2)
double bpr_loss(std::span<const double> user, std::span<const double> pos,
                std::span<const double> neg, double l2);
void bpr_gradient(std::span<const double> user, std::span<const double> pos,
                  std::span<const double> neg, double l2, std::span<double> grad_user,
                  std::span<double> grad_pos, std::span<double> grad_neg);

/// (<u, item> - label)^2 + l2 * (|u|^2 + |item|^2)
double squared_loss(std::span<const double> user, std::span<const double> item, double label,
                    double l2);
void squared_gradient(std::span<const double> user, std::span<const double> item, double label,
                      double l2, std::span<double> grad_user, std::span<double> grad_item);

} // namespace objectives

} // namespace urbanloop::recsys
