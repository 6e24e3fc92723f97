#include "urbanloop/engine/engine.hpp"

#include "urbanloop/common/csv.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace urbanloop::engine {

std::uint64_t replicate_seed(std::uint64_t master, std::size_t replicate)
{
    return derive_seed(master, "replicate", replicate);
}

std::vector<CellOutcome> sweep(const World& world, const SimulationConfig& base,
                               const SweepOptions& options)
{
    if (options.runs == 0)
        throw std::invalid_argument("sweep: runs must be at least 1");
    std::vector<CellOutcome> outcomes;
    for (double eta : options.etas)
        for (const auto& algorithm : options.algorithms)
            for (std::size_t r = 0; r < options.runs; ++r)
                outcomes.push_back(
                    {SweepCell{eta, algorithm, r, replicate_seed(base.seed, r)}, {}, {}, {}});

    auto run_cell = [&](CellOutcome& out) {
        try {
            SimulationConfig config = base;
            config.eta = out.cell.eta;
            config.algorithm = out.cell.algorithm;
            config.seed = out.cell.seed;
            auto result = run_simulation(world, config);
            out.metrics = metrics::run_metrics(result.events(), result.epochs());
            if (options.keep_visits)
                out.result = std::move(result);
        } catch (const std::exception& e) {
            out.error = e.what();
            if (out.error.empty())
                out.error = "unknown failure";
        }
    };

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < outcomes.size(); i = next++)
            run_cell(outcomes[i]);
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(options.cell_workers,
                                                                  outcomes.size()));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(work);
    }
    return outcomes;
}

namespace {

const std::vector<std::string>& metric_names()
{
    static const std::vector<std::string> names = {
        "mean_individual_gini", "collective_gini", "alpha",      "richclub_density",
        "peripheral_density",   "median_degree",   "node_count", "edge_count"};
    return names;
}

std::optional<double> metric_value(const metrics::RunMetrics& m, std::size_t which)
{
    switch (which) {
    case 0: return m.mean_individual_gini;
    case 1: return m.collective_gini;
    case 2: return m.alpha;
    case 3: return m.richclub_density;
    case 4: return m.peripheral_density;
    case 5: return m.median_degree;
    case 6: return static_cast<double>(m.node_count);
    default: return static_cast<double>(m.edge_count);
    }
}

} // namespace

std::vector<AggregateRow> aggregate(std::span<const CellOutcome> outcomes)
{
    std::vector<AggregateRow> rows;
    std::vector<std::vector<const metrics::RunMetrics*>> completed;
    for (const CellOutcome& o : outcomes) {
        std::size_t at = 0;
        while (at < rows.size() &&
               !(rows[at].eta == o.cell.eta && rows[at].algorithm == o.cell.algorithm))
            ++at;
        if (at == rows.size()) {
            rows.push_back({o.cell.eta, o.cell.algorithm, 0, 0, {}});
            completed.emplace_back();
        }
        ++rows[at].runs;
        if (o.ok() && o.metrics)
            completed[at].push_back(&*o.metrics);
        else
            ++rows[at].failed;
    }

    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t k = 0; k < metric_names().size(); ++k) {
            std::vector<double> xs;
            for (const auto* m : completed[r])
                if (const auto x = metric_value(*m, k))
                    xs.push_back(*x);
            double mean = std::nan("");
            double sd = std::nan("");
            if (!xs.empty()) {
                mean = 0.0;
                for (double x : xs)
                    mean += x;
                mean /= static_cast<double>(xs.size());
                double ss = 0.0;
                for (double x : xs)
                    ss += (x - mean) * (x - mean);
                sd = std::sqrt(ss / static_cast<double>(xs.size()));
            }
            rows[r].stats.push_back({metric_names()[k], {mean, sd}});
        }
    }
    return rows;
}

void write_aggregate_csv(std::span<const AggregateRow> rows, std::ostream& out)
{
    out << "eta,algorithm,runs,failed";
    for (const auto& name : metric_names())
        out << ',' << name << "_mean," << name << "_std";
    out << '\n';
    auto cell = [&](double x) {
        if (std::isfinite(x))
            out << csv::format_double(x);
    };
    for (const AggregateRow& row : rows) {
        out << csv::format_double(row.eta) << ',' << csv::escape(row.algorithm) << ',' << row.runs
            << ',' << row.failed;
        for (const auto& [name, stat] : row.stats) {
            out << ',';
            cell(stat.first);
            out << ',';
            cell(stat.second);
        }
        out << '\n';
    }
}

} // namespace urbanloop::engine
