#include "urbanloop/metrics/metrics.hpp"

#include "urbanloop/common/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace urbanloop::metrics {

double gini(std::span<const double> counts)
{
    if (counts.empty())
        throw DomainError("gini: empty vector");
    std::vector<double> x(counts.begin(), counts.end());
    for (double v : x)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("gini: counts must be finite and non-negative");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double total = 0.0;
    double weighted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        total += x[i];
        // Rank i + 1 carries weight n + 1 - (i + 1).
        weighted += (n - static_cast<double>(i)) * x[i];
    }
    if (!(total > 0.0))
        throw DomainError("gini: all counts are zero");
    return (n + 1.0 - 2.0 * weighted / total) / n;
}

std::vector<std::pair<VenueIndex, double>> venue_visit_counts(std::span<const VisitEvent> visits)
{
    std::map<VenueIndex, double> counts;
    for (const VisitEvent& e : visits)
        counts[e.venue] += 1.0;
    return {counts.begin(), counts.end()};
}

double collective_gini(std::span<const VisitEvent> visits)
{
    const auto counts = venue_visit_counts(visits);
    std::vector<double> x;
    x.reserve(counts.size());
    for (const auto& [v, n] : counts)
        x.push_back(n);
    return gini(x);
}

double mean_individual_gini(std::span<const VisitEvent> visits)
{
    if (visits.empty())
        throw DomainError("mean_individual_gini: empty visit set");
    std::map<UserIndex, std::map<VenueIndex, double>> per_user;
    for (const VisitEvent& e : visits)
        per_user[e.user][e.venue] += 1.0;
    double sum = 0.0;
    std::vector<double> x;
    for (const auto& [u, counts] : per_user) {
        x.clear();
        for (const auto& [v, n] : counts)
            x.push_back(n);
        sum += gini(x);
    }
    return sum / static_cast<double>(per_user.size());
}

std::vector<LorenzPoint> lorenz(std::span<const double> counts)
{
    // Validates as gini does.
    (void)gini(counts);
    std::vector<double> x(counts.begin(), counts.end());
    std::sort(x.begin(), x.end());
    const double total = std::accumulate(x.begin(), x.end(), 0.0);
    const double n = static_cast<double>(x.size());
    std::vector<LorenzPoint> out{{0.0, 0.0}};
    double running = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        running += x[i];
        out.push_back({static_cast<double>(i + 1) / n, running / total});
    }
    out.back() = {1.0, 1.0};
    return out;
}

std::vector<RankSize> rank_size(std::span<const std::pair<VenueIndex, double>> counts)
{
    std::vector<std::pair<VenueIndex, double>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second)
            return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<RankSize> out;
    out.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        out.push_back({i + 1, sorted[i].first, sorted[i].second});
    return out;
}

std::vector<std::size_t> ColocationNetwork::degrees() const
{
    std::vector<std::size_t> deg(nodes.size(), 0);
    auto slot = [&](UserIndex u) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), u) -
                                        nodes.begin());
    };
    for (const Edge& e : edges) {
        ++deg[slot(e.a)];
        ++deg[slot(e.b)];
    }
    return deg;
}

ColocationNetwork colocation(std::span<const VisitEvent> visits,
                             std::span<const std::size_t> epoch_of, bool keep_witnesses)
{
    if (visits.size() != epoch_of.size())
        throw std::invalid_argument("colocation: one epoch label per visit required");

    // (epoch, venue) -> distinct users
    std::map<std::pair<std::size_t, VenueIndex>, std::set<UserIndex>> groups;
    std::set<UserIndex> nodes;
    for (std::size_t i = 0; i < visits.size(); ++i) {
        groups[{epoch_of[i], visits[i].venue}].insert(visits[i].user);
        nodes.insert(visits[i].user);
    }

    std::map<Edge, std::vector<Witness>> edges;
    for (const auto& [key, users] : groups) {
        const std::vector<UserIndex> members(users.begin(), users.end());
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                auto& w = edges[Edge{members[i], members[j]}];
                if (keep_witnesses)
                    w.push_back({key.second, key.first});
            }
    }

    ColocationNetwork net;
    net.nodes.assign(nodes.begin(), nodes.end());
    net.edges.reserve(edges.size());
    for (auto& [edge, w] : edges) {
        net.edges.push_back(edge);
        if (keep_witnesses) {
            std::sort(w.begin(), w.end());
            net.witnesses.push_back(std::move(w));
        }
    }
    return net;
}

ColocationNetwork colocation(std::span<const VisitEvent> visits,
                             std::span<const std::pair<Timestamp, Timestamp>> windows,
                             bool keep_witnesses)
{
    for (std::size_t w = 0; w < windows.size(); ++w) {
        if (windows[w].first > windows[w].second)
            throw std::invalid_argument("colocation: window ends before it starts");
        if (w > 0 && windows[w].first <= windows[w - 1].second)
            throw std::invalid_argument("colocation: windows overlap or are unordered");
    }
    std::vector<VisitEvent> kept;
    std::vector<std::size_t> labels;
    for (const VisitEvent& e : visits) {
        const auto it = std::lower_bound(
            windows.begin(), windows.end(), e.time,
            [](const std::pair<Timestamp, Timestamp>& w, Timestamp t) { return w.second < t; });
        if (it != windows.end() && it->first <= e.time) {
            kept.push_back(e);
            labels.push_back(static_cast<std::size_t>(it - windows.begin()));
        }
    }
    return colocation(kept, labels, keep_witnesses);
}

std::vector<std::pair<std::size_t, double>> degree_distribution(std::span<const std::size_t> degrees)
{
    std::map<std::size_t, std::size_t> freq;
    for (std::size_t k : degrees)
        if (k >= 1)
            ++freq[k];
    std::vector<std::pair<std::size_t, double>> out;
    const double n = static_cast<double>(degrees.size());
    for (const auto& [k, c] : freq)
        out.emplace_back(k, static_cast<double>(c) / n);
    return out;
}

double degree_slope(std::span<const std::size_t> degrees)
{
    const auto dist = degree_distribution(degrees);
    if (dist.size() < 2)
        throw DomainError("degree_slope: fewer than two distinct positive degrees");
    double mx = 0.0, my = 0.0;
    for (const auto& [k, p] : dist) {
        mx += std::log(static_cast<double>(k));
        my += std::log(p);
    }
    const double n = static_cast<double>(dist.size());
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [k, p] : dist) {
        const double dx = std::log(static_cast<double>(k)) - mx;
        sxy += dx * (std::log(p) - my);
        sxx += dx * dx;
    }
    return std::abs(sxy / sxx);
}

double degree_slope(const ColocationNetwork& net)
{
    return degree_slope(net.degrees());
}

namespace {

// Slots of the h highest-degree nodes, ties by ascending user.
std::vector<char> rich_mask(const ColocationNetwork& net, std::size_t h)
{
    if (h < 2)
        throw DomainError("rich club needs h >= 2");
    if (net.nodes.size() < h)
        throw DomainError("rich club: network has fewer than h nodes");
    const auto deg = net.degrees();
    std::vector<std::size_t> order(net.nodes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // nodes are ascending, so slot order is user order.
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return deg[a] > deg[b]; });
    std::vector<char> mask(net.nodes.size(), 0);
    for (std::size_t i = 0; i < h; ++i)
        mask[order[i]] = 1;
    return mask;
}

std::size_t slot_of(const ColocationNetwork& net, UserIndex u)
{
    return static_cast<std::size_t>(std::lower_bound(net.nodes.begin(), net.nodes.end(), u) -
                                    net.nodes.begin());
}

double pair_density(std::size_t edges, std::size_t nodes)
{
    if (nodes < 2)
        return 0.0;
    const double possible = static_cast<double>(nodes) * static_cast<double>(nodes - 1) / 2.0;
    return static_cast<double>(edges) / possible;
}

} // namespace

double richclub_density(const ColocationNetwork& net, std::size_t h)
{
    const auto mask = rich_mask(net, h);
    std::size_t inside = 0;
    for (const Edge& e : net.edges)
        if (mask[slot_of(net, e.a)] && mask[slot_of(net, e.b)])
            ++inside;
    return pair_density(inside, h);
}

double peripheral_density(const ColocationNetwork& net, std::size_t h)
{
    const auto mask = rich_mask(net, h);
    std::size_t inside = 0;
    for (const Edge& e : net.edges)
        if (!mask[slot_of(net, e.a)] && !mask[slot_of(net, e.b)])
            ++inside;
    return pair_density(inside, net.nodes.size() - h);
}

double median_degree(const ColocationNetwork& net)
{
    auto deg = net.degrees();
    if (deg.empty())
        throw DomainError("median_degree: empty network");
    std::sort(deg.begin(), deg.end());
    const std::size_t n = deg.size();
    if (n % 2 == 1)
        return static_cast<double>(deg[n / 2]);
    return (static_cast<double>(deg[n / 2 - 1]) + static_cast<double>(deg[n / 2])) / 2.0;
}

std::vector<std::pair<UserIndex, VenueIndex>>
exploration_pairs(std::span<const VisitEvent> train, std::span<const VisitEvent> simulated)
{
    std::set<std::pair<UserIndex, VenueIndex>> known;
    for (const VisitEvent& e : train)
        known.insert({e.user, e.venue});
    std::set<std::pair<UserIndex, VenueIndex>> out;
    for (const VisitEvent& e : simulated)
        if (!known.contains({e.user, e.venue}))
            out.insert({e.user, e.venue});
    return {out.begin(), out.end()};
}

DecileReport decile_report(std::span<const VisitEvent> train,
                           std::span<const std::pair<UserIndex, VenueIndex>> exploration,
                           std::size_t min_visitors)
{
    std::map<VenueIndex, std::set<UserIndex>> visitors;
    for (const VisitEvent& e : train)
        visitors[e.venue].insert(e.user);

    std::vector<std::pair<std::size_t, VenueIndex>> eligible;
    for (const auto& [v, users] : visitors)
        if (users.size() >= min_visitors)
            eligible.emplace_back(users.size(), v);
    if (eligible.size() < decile_count)
        throw DomainError("decile_report: fewer than ten eligible venues");
    std::sort(eligible.begin(), eligible.end());

    DecileReport report;
    std::map<VenueIndex, std::size_t> decile_of;
    const std::size_t base = eligible.size() / decile_count;
    const std::size_t extra = eligible.size() % decile_count;
    std::size_t at = 0;
    for (std::size_t g = 0; g < decile_count; ++g) {
        const std::size_t size = base + (g < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i, ++at) {
            report.venues[g].push_back(eligible[at].second);
            decile_of[eligible[at].second] = g;
        }
        std::sort(report.venues[g].begin(), report.venues[g].end());
    }

    double train_total = 0.0;
    for (const auto& [degree, v] : eligible) {
        report.train_share[decile_of[v]] += static_cast<double>(degree);
        train_total += static_cast<double>(degree);
    }

    std::set<std::pair<UserIndex, VenueIndex>> pairs(exploration.begin(), exploration.end());
    double explore_total = 0.0;
    for (const auto& [u, v] : pairs) {
        const auto it = decile_of.find(v);
        if (it == decile_of.end())
            continue;
        report.exploration_share[it->second] += 1.0;
        explore_total += 1.0;
    }
    if (explore_total == 0.0)
        throw DomainError("decile_report: no exploration pair on an eligible venue");

    for (std::size_t g = 0; g < decile_count; ++g) {
        report.train_share[g] /= train_total;
        report.exploration_share[g] /= explore_total;
        report.delta[g] = report.exploration_share[g] - report.train_share[g];
    }
    return report;
}

RunMetrics run_metrics(std::span<const VisitEvent> visits, std::span<const std::size_t> epoch_of,
                       std::size_t h)
{
    RunMetrics m;
    m.mean_individual_gini = mean_individual_gini(visits);
    m.collective_gini = collective_gini(visits);
    const auto net = colocation(visits, epoch_of, false);
    m.node_count = net.node_count();
    m.edge_count = net.edge_count();
    if (!net.nodes.empty())
        m.median_degree = median_degree(net);
    try {
        m.alpha = degree_slope(net);
    } catch (const DomainError&) {
    }
    if (net.nodes.size() >= h && h >= 2) {
        m.richclub_density = richclub_density(net, h);
        m.peripheral_density = peripheral_density(net, h);
    }
    return m;
}

nlohmann::json to_json(const RunMetrics& m)
{
    auto opt = [](const std::optional<double>& x) {
        return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
    };
    return {{"mean_individual_gini", m.mean_individual_gini},
            {"collective_gini", m.collective_gini},
            {"alpha", opt(m.alpha)},
            {"richclub_density", opt(m.richclub_density)},
            {"peripheral_density", opt(m.peripheral_density)},
            {"median_degree", opt(m.median_degree)},
            {"node_count", m.node_count},
            {"edge_count", m.edge_count}};
}

} // namespace urbanloop::metrics
