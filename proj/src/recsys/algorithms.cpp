#include "urbanloop/recsys/algorithms.hpp"

#include "urbanloop/geo/geo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace urbanloop::recsys {

namespace {

// Counts overlaps of `self` with every other entity reachable through the
// bipartite structure, then keeps the k best by cosine.
template <typename Outer, typename Inner>
std::vector<Neighbor> top_k_similar(std::uint32_t self, Outer outer, Inner inner,
                                    std::size_t k,
                                    std::vector<std::uint32_t>& overlap,
                                    std::vector<std::uint32_t>& touched)
{
    const auto own = outer(self);
    touched.clear();
    for (std::uint32_t via : own)
        for (std::uint32_t other : inner(via)) {
            if (other == self)
                continue;
            if (overlap[other]++ == 0)
                touched.push_back(other);
        }

    std::vector<Neighbor> candidates;
    candidates.reserve(touched.size());
    for (std::uint32_t other : touched) {
        const double denom =
            std::sqrt(static_cast<double>(own.size()) * static_cast<double>(outer(other).size()));
        candidates.push_back({other, static_cast<double>(overlap[other]) / denom});
        overlap[other] = 0;
    }
    const std::size_t keep = std::min(k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), [](const Neighbor& a, const Neighbor& b) {
                          if (a.similarity != b.similarity)
                              return a.similarity > b.similarity;
                          return a.index < b.index;
                      });
    candidates.resize(keep);
    return candidates;
}

nlohmann::json matrix_to_json(const InteractionMatrix& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (UserIndex u : m.users()) {
        auto r = m.row(u);
        rows.push_back({{"user", u}, {"venues", std::vector<VenueIndex>(r.begin(), r.end())}});
    }
    return {{"user_space", m.user_space()}, {"venue_space", m.venue_space()}, {"rows", rows}};
}

nlohmann::json neighbors_to_json(const NeighborLists& lists)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& list : lists) {
        nlohmann::json row = nlohmann::json::array();
        for (const Neighbor& n : list)
            row.push_back({n.index, n.similarity});
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace

double cosine_binary(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b)
{
    if (a.empty() || b.empty())
        return 0.0;
    std::size_t common = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++common;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(common) /
           std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

NeighborLists user_neighbors(const InteractionMatrix& m, std::size_t k)
{
    NeighborLists out(m.user_space());
    std::vector<std::uint32_t> overlap(m.user_space(), 0);
    std::vector<std::uint32_t> touched;
    auto rows = [&](std::uint32_t u) { return m.row(u); };
    auto cols = [&](std::uint32_t v) { return m.column(v); };
    for (UserIndex u : m.users())
        out[u] = top_k_similar(u, rows, cols, k, overlap, touched);
    return out;
}

NeighborLists venue_neighbors(const InteractionMatrix& m, std::size_t k)
{
    NeighborLists out(m.venue_space());
    std::vector<std::uint32_t> overlap(m.venue_space(), 0);
    std::vector<std::uint32_t> touched;
    auto cols = [&](std::uint32_t v) { return m.column(v); };
    auto rows = [&](std::uint32_t u) { return m.row(u); };
    for (VenueIndex v : m.venues())
        out[v] = top_k_similar(v, cols, rows, k, overlap, touched);
    return out;
}

UserKnnScorer::UserKnnScorer(std::shared_ptr<const InteractionMatrix> matrix,
                             NeighborLists neighbors)
    : matrix_(std::move(matrix)), neighbors_(std::move(neighbors))
{
}

void UserKnnScorer::score(UserIndex user, std::span<const VenueIndex> candidates,
                          const ScoringContext&, std::span<double> out) const
{
    std::fill(out.begin(), out.end(), 0.0);
    if (user >= neighbors_.size())
        return;
    for (const Neighbor& n : neighbors_[user]) {
        const auto row = matrix_->row(n.index);
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (std::binary_search(row.begin(), row.end(), candidates[i]))
                out[i] += n.similarity;
    }
}

nlohmann::json UserKnnScorer::to_json() const
{
    return {{"matrix", matrix_to_json(*matrix_)}, {"neighbors", neighbors_to_json(neighbors_)}};
}

ItemKnnScorer::ItemKnnScorer(std::shared_ptr<const InteractionMatrix> matrix,
                             NeighborLists neighbors)
    : matrix_(std::move(matrix)), neighbors_(std::move(neighbors))
{
}

void ItemKnnScorer::score(UserIndex user, std::span<const VenueIndex> candidates,
                          const ScoringContext&, std::span<double> out) const
{
    const auto history = matrix_->row(user);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double s = 0.0;
        if (candidates[i] < neighbors_.size())
            for (const Neighbor& n : neighbors_[candidates[i]])
                if (std::binary_search(history.begin(), history.end(), n.index))
                    s += n.similarity;
        out[i] = s;
    }
}

nlohmann::json ItemKnnScorer::to_json() const
{
    return {{"matrix", matrix_to_json(*matrix_)}, {"neighbors", neighbors_to_json(neighbors_)}};
}

FactorScorer::FactorScorer(std::string kind, FactorMatrix users, FactorMatrix venues)
    : kind_(std::move(kind)), users_(std::move(users)), venues_(std::move(venues))
{
    if (users_.dims != venues_.dims)
        throw std::invalid_argument("FactorScorer: dimension mismatch");
}

void FactorScorer::score(UserIndex user, std::span<const VenueIndex> candidates,
                         const ScoringContext&, std::span<double> out) const
{
    if (user >= users_.rows) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const auto p = users_.row(user);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] >= venues_.rows) {
            out[i] = 0.0;
            continue;
        }
        const auto q = venues_.row(candidates[i]);
        double dot = 0.0;
        for (std::size_t d = 0; d < p.size(); ++d)
            dot += p[d] * q[d];
        out[i] = dot;
    }
}

nlohmann::json FactorScorer::to_json() const
{
    return {{"dims", users_.dims},
            {"user_rows", users_.rows},
            {"venue_rows", venues_.rows},
            {"user_factors", users_.values},
            {"venue_factors", venues_.values}};
}

std::vector<std::optional<LatLon>> visited_centroids(const InteractionMatrix& m,
                                                     const Catalog& catalog)
{
    std::vector<std::optional<LatLon>> out(m.user_space());
    for (UserIndex u : m.users()) {
        const auto row = m.row(u);
        LatLon c;
        for (VenueIndex v : row) {
            c.lat += catalog.position(v).lat;
            c.lon += catalog.position(v).lon;
        }
        c.lat /= static_cast<double>(row.size());
        c.lon /= static_cast<double>(row.size());
        out[u] = c;
    }
    return out;
}

PgnScorer::PgnScorer(std::shared_ptr<const UserKnnScorer> knn,
                     std::shared_ptr<const PopularityScorer> popularity,
                     std::shared_ptr<const Catalog> catalog,
                     std::vector<std::optional<LatLon>> centroids)
    : knn_(std::move(knn)),
      popularity_(std::move(popularity)),
      catalog_(std::move(catalog)),
      centroids_(std::move(centroids))
{
}

void PgnScorer::score(UserIndex user, std::span<const VenueIndex> candidates,
                      const ScoringContext& context, std::span<double> out) const
{
    const std::size_t n = candidates.size();
    std::vector<double> knn(n), pop(n), near(n);
    knn_->score(user, candidates, context, knn);
    popularity_->score(user, candidates, context, pop);
    const std::optional<LatLon> centroid =
        user < centroids_.size() ? centroids_[user] : std::nullopt;
    for (std::size_t i = 0; i < n; ++i)
        near[i] = centroid ? 1.0 / (1.0 + geo::haversine(catalog_->position(candidates[i]),
                                                         *centroid))
                           : 0.0;
    const auto a = min_max_normalize(knn);
    const auto b = min_max_normalize(pop);
    const auto c = min_max_normalize(near);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (a[i] + b[i] + c[i]) / 3.0;
}

nlohmann::json PgnScorer::to_json() const
{
    nlohmann::json centroids = nlohmann::json::array();
    for (const auto& c : centroids_)
        centroids.push_back(c ? nlohmann::json::array({c->lat, c->lon}) : nlohmann::json());
    return {{"knn", knn_->to_json()}, {"popularity", popularity_->to_json()},
            {"centroids", centroids}};
}

namespace objectives {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double squared_norm(std::span<const double> a)
{
    return dot(a, a);
}

// -ln sigma(x) without overflow.
double softplus_neg(double x)
{
    return x > 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x)
{
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

double bpr_loss(std::span<const double> user, std::span<const double> pos,
                std::span<const double> neg, double l2)
{
    const double x = dot(user, pos) - dot(user, neg);
    return softplus_neg(x) + l2 * (squared_norm(user) + squared_norm(pos) + squared_norm(neg));
}

void bpr_gradient(std::span<const double> user, std::span<const double> pos,
                  std::span<const double> neg, double l2, std::span<double> grad_user,
                  std::span<double> grad_pos, std::span<double> grad_neg)
{
    const double x = dot(user, pos) - dot(user, neg);
    // d/dx of -ln sigma(x) is -(1 - sigma(x)) = -sigma(-x).
    const double g = -sigmoid(-x);
    for (std::size_t d = 0; d < user.size(); ++d) {
        grad_user[d] = g * (pos[d] - neg[d]) + 2.0 * l2 * user[d];
        grad_pos[d] = g * user[d] + 2.0 * l2 * pos[d];
        grad_neg[d] = -g * user[d] + 2.0 * l2 * neg[d];
    }
}

double squared_loss(std::span<const double> user, std::span<const double> item, double label,
                    double l2)
{
    const double e = dot(user, item) - label;
    return e * e + l2 * (squared_norm(user) + squared_norm(item));
}

void squared_gradient(std::span<const double> user, std::span<const double> item, double label,
                      double l2, std::span<double> grad_user, std::span<double> grad_item)
{
    const double e = dot(user, item) - label;
    for (std::size_t d = 0; d < user.size(); ++d) {
        grad_user[d] = 2.0 * e * item[d] + 2.0 * l2 * user[d];
        grad_item[d] = 2.0 * e * user[d] + 2.0 * l2 * item[d];
    }
}

} // namespace objectives

} // namespace urbanloop::recsys
