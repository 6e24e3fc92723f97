#include "urbanloop/recsys/training.hpp"

#include "urbanloop/common/error.hpp"
#include "urbanloop/recsys/algorithms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace urbanloop::recsys {

namespace {

constexpr int model_format_version = 1;

std::shared_ptr<const PopularityScorer> fit_popularity(const InteractionMatrix& m)
{
    std::vector<std::uint32_t> visitors(m.venue_space(), 0);
    for (VenueIndex v : m.venues())
        visitors[v] = static_cast<std::uint32_t>(m.column(v).size());
    return std::make_shared<const PopularityScorer>(std::move(visitors));
}

void require_positives(const InteractionMatrix& m, std::string_view kind)
{
    if (m.nnz() == 0)
        throw DomainError(std::string(kind) + ": interaction matrix has no positives");
}

/// Adam applied only to the rows a batch touched (the other rows have zero
/// gradient), with bias correction from the global step count.
class LazyAdam
{
public:
    LazyAdam(FactorMatrix& params, const TrainingOptions& o)
        : params_(params),
          m_(params.values.size(), 0.0),
          v_(params.values.size(), 0.0),
          beta1_(o.adam_beta1),
          beta2_(o.adam_beta2),
          epsilon_(o.adam_epsilon),
          lr_(o.learning_rate)
    {
    }

    void update(std::size_t row, std::span<const double> grad, std::size_t step)
    {
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step));
        const std::size_t base = row * params_.dims;
        for (std::size_t d = 0; d < params_.dims; ++d) {
            double& m = m_[base + d];
            double& v = v_[base + d];
            m = beta1_ * m + (1.0 - beta1_) * grad[d];
            v = beta2_ * v + (1.0 - beta2_) * grad[d] * grad[d];
            params_.values[base + d] -= lr_ * (m / c1) / (std::sqrt(v / c2) + epsilon_);
        }
    }

private:
    FactorMatrix& params_;
    std::vector<double> m_;
    std::vector<double> v_;
    double beta1_;
    double beta2_;
    double epsilon_;
    double lr_;
};

/// Gradient rows accumulated over one mini-batch.
class BatchGradient
{
public:
    explicit BatchGradient(std::size_t dims) : dims_(dims) {}

    void clear()
    {
        rows_.clear();
        values_.clear();
    }

    void add(std::size_t row, std::span<const double> grad)
    {
        std::size_t slot = 0;
        while (slot < rows_.size() && rows_[slot] != row)
            ++slot;
        if (slot == rows_.size()) {
            rows_.push_back(row);
            values_.resize(values_.size() + dims_, 0.0);
        }
        for (std::size_t d = 0; d < dims_; ++d)
            values_[slot * dims_ + d] += grad[d];
    }

    template <typename Apply>
    void apply(double scale, Apply&& apply_row)
    {
        for (std::size_t slot = 0; slot < rows_.size(); ++slot) {
            std::span<double> g(values_.data() + slot * dims_, dims_);
            for (double& x : g)
                x *= scale;
            apply_row(rows_[slot], std::span<const double>(g));
        }
    }

private:
    std::size_t dims_;
    std::vector<std::size_t> rows_;
    std::vector<double> values_;
};

FactorMatrix random_factors(std::size_t rows, std::size_t dims, double range, RandomStream& rng)
{
    FactorMatrix f{rows, dims, std::vector<double>(rows * dims)};
    for (double& x : f.values)
        x = (2.0 * rng.uniform() - 1.0) * range;
    return f;
}

std::optional<VenueIndex> sample_negative(const InteractionMatrix& m, UserIndex u,
                                          RandomStream& rng)
{
    const auto& pool = m.venues();
    if (m.row(u).size() >= pool.size())
        return std::nullopt;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const VenueIndex j = pool[rng.index(pool.size())];
        if (!m.contains(u, j))
            return j;
    }
    return std::nullopt;
}

struct EarlyStopping
{
    std::size_t patience;
    double min_delta;
    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    // True when training should stop after this epoch.
    bool observe(double loss)
    {
        if (loss < best - min_delta) {
            best = loss;
            stale = 0;
            return false;
        }
        return ++stale >= patience;
    }
};

struct Sample
{
    UserIndex user;
    VenueIndex item;
    // BPR: the negative item; MF: label in {0, 1}.
    VenueIndex other;
};

std::vector<std::pair<UserIndex, VenueIndex>> positives_of(const InteractionMatrix& m)
{
    std::vector<std::pair<UserIndex, VenueIndex>> out;
    out.reserve(m.nnz());
    for (UserIndex u = 0; u < m.user_space(); ++u)
        for (VenueIndex v : m.row(u))
            out.emplace_back(u, v);
    return out;
}

enum class FactorObjective
{
    squared,
    bpr,
};

std::shared_ptr<const Scorer> fit_factors(const TrainingInput& in, TrainingReport& report,
                                          FactorObjective objective)
{
    const InteractionMatrix& m = *in.matrix;
    const TrainingOptions& o = in.options;
    const char* kind = objective == FactorObjective::bpr ? "BPRMF" : "MF";
    require_positives(m, kind);
    if (o.factors == 0 || o.batch_size == 0)
        throw std::invalid_argument("factor training needs factors > 0 and batch_size > 0");

    FactorMatrix users = random_factors(m.user_space(), o.factors, o.init_range, in.rng);
    FactorMatrix items = random_factors(m.venue_space(), o.factors, o.init_range, in.rng);
    LazyAdam user_opt(users, o);
    LazyAdam item_opt(items, o);
    BatchGradient user_grad(o.factors);
    BatchGradient item_grad(o.factors);
    std::vector<double> gu(o.factors), gi(o.factors), gj(o.factors);

    auto positives = positives_of(m);
    std::vector<Sample> samples;
    EarlyStopping stopper{o.patience, o.min_delta};
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < o.max_epochs; ++epoch) {
        samples.clear();
        in.rng.shuffle(std::span(positives));
        for (const auto& [u, i] : positives) {
            const auto j = sample_negative(m, u, in.rng);
            if (objective == FactorObjective::bpr) {
                if (j)
                    samples.push_back({u, i, *j});
            } else {
                samples.push_back({u, i, 1});
                if (j)
                    samples.push_back({u, *j, 0});
            }
        }
        if (objective == FactorObjective::squared)
            in.rng.shuffle(std::span(samples));
        if (samples.empty())
            throw DomainError(std::string(kind) + ": no trainable samples");

        double total = 0.0;
        for (std::size_t start = 0; start < samples.size(); start += o.batch_size) {
            const std::size_t end = std::min(samples.size(), start + o.batch_size);
            user_grad.clear();
            item_grad.clear();
            for (std::size_t s = start; s < end; ++s) {
                const Sample& x = samples[s];
                const auto p = users.row(x.user);
                const auto q = items.row(x.item);
                if (objective == FactorObjective::bpr) {
                    const auto n = items.row(x.other);
                    total += objectives::bpr_loss(p, q, n, o.l2);
                    objectives::bpr_gradient(p, q, n, o.l2, gu, gi, gj);
                    item_grad.add(x.other, gj);
                } else {
                    const double label = static_cast<double>(x.other);
                    total += objectives::squared_loss(p, q, label, o.l2);
                    objectives::squared_gradient(p, q, label, o.l2, gu, gi);
                }
                user_grad.add(x.user, gu);
                item_grad.add(x.item, gi);
            }
            ++step;
            const double scale = 1.0 / static_cast<double>(end - start);
            user_grad.apply(scale, [&](std::size_t r, std::span<const double> g) {
                user_opt.update(r, g, step);
            });
            item_grad.apply(scale, [&](std::size_t r, std::span<const double> g) {
                item_opt.update(r, g, step);
            });
        }

        const double loss = total / static_cast<double>(samples.size());
        report.epoch_losses.push_back(loss);
        report.epochs = epoch + 1;
        if (!std::isfinite(loss))
            throw DomainError(std::string(kind) + ": training diverged");
        if (stopper.observe(loss)) {
            report.early_stopped = true;
            break;
        }
    }
    return std::make_shared<const FactorScorer>(kind, std::move(users), std::move(items));
}

std::shared_ptr<const UserKnnScorer> fit_user_knn(const TrainingInput& in)
{
    require_positives(*in.matrix, "UserKNN");
    return std::make_shared<const UserKnnScorer>(in.matrix,
                                                 user_neighbors(*in.matrix, in.options.neighbors));
}

// ---- JSON helpers ----

std::shared_ptr<const InteractionMatrix> matrix_from_json(const nlohmann::json& j)
{
    std::vector<VisitEvent> events;
    for (const auto& row : j.at("rows")) {
        const auto u = row.at("user").get<UserIndex>();
        for (VenueIndex v : row.at("venues").get<std::vector<VenueIndex>>())
            events.push_back(VisitEvent{u, v, 0, 0});
    }
    return std::make_shared<const InteractionMatrix>(build_interactions(
        events, j.at("user_space").get<std::size_t>(), j.at("venue_space").get<std::size_t>()));
}

NeighborLists neighbors_from_json(const nlohmann::json& j)
{
    NeighborLists out;
    out.reserve(j.size());
    for (const auto& row : j) {
        std::vector<Neighbor> list;
        for (const auto& n : row)
            list.push_back({n.at(0).get<std::uint32_t>(), n.at(1).get<double>()});
        out.push_back(std::move(list));
    }
    return out;
}

std::shared_ptr<const PopularityScorer> popularity_from_json(const nlohmann::json& j)
{
    return std::make_shared<const PopularityScorer>(
        j.at("visitors").get<std::vector<std::uint32_t>>());
}

std::shared_ptr<const UserKnnScorer> user_knn_from_json(const nlohmann::json& j)
{
    return std::make_shared<const UserKnnScorer>(matrix_from_json(j.at("matrix")),
                                                 neighbors_from_json(j.at("neighbors")));
}

std::shared_ptr<const Scorer> factors_from_json(const std::string& kind, const nlohmann::json& j)
{
    const auto dims = j.at("dims").get<std::size_t>();
    FactorMatrix users{j.at("user_rows").get<std::size_t>(), dims,
                       j.at("user_factors").get<std::vector<double>>()};
    FactorMatrix items{j.at("venue_rows").get<std::size_t>(), dims,
                       j.at("venue_factors").get<std::vector<double>>()};
    if (users.values.size() != users.rows * dims || items.values.size() != items.rows * dims)
        throw DataError("model dump: factor matrix size mismatch");
    return std::make_shared<const FactorScorer>(kind, std::move(users), std::move(items));
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

} // namespace

RecommenderRegistry::RecommenderRegistry()
{
    add(
        "Popularity",
        [](const TrainingInput& in, TrainingReport&) -> std::shared_ptr<const Scorer> {
            return fit_popularity(*in.matrix);
        },
        [](const nlohmann::json& j, const std::shared_ptr<const Catalog>&)
            -> std::shared_ptr<const Scorer> { return popularity_from_json(j); });
    add(
        "UserKNN",
        [](const TrainingInput& in, TrainingReport&) -> std::shared_ptr<const Scorer> {
            return fit_user_knn(in);
        },
        [](const nlohmann::json& j, const std::shared_ptr<const Catalog>&)
            -> std::shared_ptr<const Scorer> { return user_knn_from_json(j); });
    add(
        "ItemKNN",
        [](const TrainingInput& in, TrainingReport&) -> std::shared_ptr<const Scorer> {
            require_positives(*in.matrix, "ItemKNN");
            return std::make_shared<const ItemKnnScorer>(
                in.matrix, venue_neighbors(*in.matrix, in.options.neighbors));
        },
        [](const nlohmann::json& j, const std::shared_ptr<const Catalog>&)
            -> std::shared_ptr<const Scorer> {
            return std::make_shared<const ItemKnnScorer>(matrix_from_json(j.at("matrix")),
                                                         neighbors_from_json(j.at("neighbors")));
        });
    add(
        "MF",
        [](const TrainingInput& in, TrainingReport& report) {
            return fit_factors(in, report, FactorObjective::squared);
        },
        [](const nlohmann::json& j, const std::shared_ptr<const Catalog>&) {
            return factors_from_json("MF", j);
        });
    add(
        "BPRMF",
        [](const TrainingInput& in, TrainingReport& report) {
            return fit_factors(in, report, FactorObjective::bpr);
        },
        [](const nlohmann::json& j, const std::shared_ptr<const Catalog>&) {
            return factors_from_json("BPRMF", j);
        });
    add(
        "PGN",
        [](const TrainingInput& in, TrainingReport&) -> std::shared_ptr<const Scorer> {
            if (!in.catalog)
                throw std::invalid_argument("PGN needs the venue catalog");
            return std::make_shared<const PgnScorer>(fit_user_knn(in), fit_popularity(*in.matrix),
                                                     in.catalog,
                                                     visited_centroids(*in.matrix, *in.catalog));
        },
        [](const nlohmann::json& j, const std::shared_ptr<const Catalog>& catalog)
            -> std::shared_ptr<const Scorer> {
            if (!catalog)
                throw std::invalid_argument("PGN needs the venue catalog");
            std::vector<std::optional<LatLon>> centroids;
            for (const auto& c : j.at("centroids"))
                centroids.push_back(c.is_null() ? std::nullopt
                                                : std::optional<LatLon>(LatLon{
                                                      c.at(0).get<double>(), c.at(1).get<double>()}));
            return std::make_shared<const PgnScorer>(user_knn_from_json(j.at("knn")),
                                                     popularity_from_json(j.at("popularity")),
                                                     catalog, std::move(centroids));
        });
}

RecommenderRegistry& RecommenderRegistry::instance()
{
    static RecommenderRegistry registry;
    return registry;
}

void RecommenderRegistry::add(std::string name, TrainFunction train, LoadFunction load)
{
    if (contains(name))
        throw std::invalid_argument("recommender kind '" + name + "' already registered");
    entries_.emplace(std::move(name), Entry{std::move(train), std::move(load)});
}

bool RecommenderRegistry::contains(std::string_view name) const
{
    const std::string wanted = lower(name);
    for (const auto& [key, entry] : entries_)
        if (lower(key) == wanted)
            return true;
    return false;
}

std::string RecommenderRegistry::canonical_name(std::string_view name) const
{
    const std::string wanted = lower(name);
    for (const auto& [key, entry] : entries_)
        if (lower(key) == wanted)
            return key;
    throw std::invalid_argument("unknown recommender kind '" + std::string(name) + "'");
}

std::vector<std::string> RecommenderRegistry::names() const
{
    std::vector<std::string> out;
    for (const auto& [key, entry] : entries_)
        out.push_back(key);
    return out;
}

const TrainFunction& RecommenderRegistry::trainer(std::string_view name) const
{
    return entries_.find(canonical_name(name))->second.train;
}

const LoadFunction& RecommenderRegistry::loader(std::string_view name) const
{
    return entries_.find(canonical_name(name))->second.load;
}

const std::vector<std::string>& builtin_algorithms()
{
    static const std::vector<std::string> names = {"Popularity", "UserKNN", "ItemKNN",
                                                   "MF",         "BPRMF",   "PGN"};
    return names;
}

Model train(std::string_view kind, std::shared_ptr<const InteractionMatrix> matrix,
            std::shared_ptr<const Catalog> catalog, const TrainingOptions& options,
            RandomStream& rng)
{
    if (!matrix)
        throw std::invalid_argument("train: null matrix");
    const auto& registry = RecommenderRegistry::instance();
    TrainingReport report;
    TrainingInput input{matrix, std::move(catalog), options, rng};
    auto scorer = registry.trainer(kind)(input, report);

    std::vector<char> known(matrix->user_space(), 0);
    for (UserIndex u : matrix->users())
        known[u] = 1;
    return Model(std::move(scorer), fit_popularity(*matrix), std::move(known), std::move(report));
}

Model retrain(std::string_view kind, std::span<const VisitEvent> base,
              std::span<const VisitEvent> simulated, std::size_t user_space,
              std::shared_ptr<const Catalog> catalog, const TrainingOptions& options,
              RandomStream& rng)
{
    if (!catalog)
        throw std::invalid_argument("retrain: null catalog");
    auto matrix = std::make_shared<const InteractionMatrix>(
        build_interactions(base, simulated, user_space, catalog->size()));
    return train(kind, std::move(matrix), std::move(catalog), options, rng);
}

nlohmann::json save_model(const Model& model)
{
    std::vector<UserIndex> known;
    for (std::size_t u = 0; u < model.known_users().size(); ++u)
        if (model.known_users()[u])
            known.push_back(static_cast<UserIndex>(u));
    const TrainingReport& r = model.report();
    return {{"format", "urbanloop-model"},
            {"version", model_format_version},
            {"kind", std::string(model.kind())},
            {"user_space", model.known_users().size()},
            {"known_users", known},
            {"popularity", model.popularity().to_json()},
            {"report",
             {{"epochs", r.epochs},
              {"early_stopped", r.early_stopped},
              {"epoch_losses", r.epoch_losses}}},
            {"state", model.scorer().to_json()}};
}

Model load_model(const nlohmann::json& doc, std::shared_ptr<const Catalog> catalog)
{
    if (doc.value("format", "") != "urbanloop-model")
        throw DataError("not a model dump");
    if (doc.at("version").get<int>() != model_format_version)
        throw DataError("unsupported model dump version");
    const auto kind = doc.at("kind").get<std::string>();
    auto scorer = RecommenderRegistry::instance().loader(kind)(doc.at("state"), catalog);

    std::vector<char> known(doc.at("user_space").get<std::size_t>(), 0);
    for (UserIndex u : doc.at("known_users").get<std::vector<UserIndex>>()) {
        if (u >= known.size())
            throw DataError("model dump: known user outside the user space");
        known[u] = 1;
    }
    TrainingReport report;
    const auto& r = doc.at("report");
    report.epochs = r.at("epochs").get<std::size_t>();
    report.early_stopped = r.at("early_stopped").get<bool>();
    report.epoch_losses = r.at("epoch_losses").get<std::vector<double>>();
    return Model(std::move(scorer), popularity_from_json(doc.at("popularity")), std::move(known),
                 std::move(report));
}

} // namespace urbanloop::recsys
