#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "recap/analysis.hpp"
#include "recap/errors.hpp"
#include "recap/estimators.hpp"
#include "recap/parallel.hpp"
#include "recap/population.hpp"
#include "recap/rng.hpp"
#include "recap/sampling.hpp"
#include "recap/stats.hpp"

namespace recap {

// ---------------------------------------------------------------------------
// Heterogeneity sweep: degree-biased capture + chain-referral recapture over
// a grid of power-law exponents.
// ---------------------------------------------------------------------------

inline std::vector<double> default_exponent_grid() {
    return {2.0, 2.25, 2.5, 2.75, 3.0, 3.5, 4.0, 5.0};
}

struct SweepConfig {
    std::vector<double> exponent_grid = default_exponent_grid();
    std::size_t networks_per_exponent = 20;
    std::size_t runs_per_network = 50;
    std::size_t population_size = 2500;
    std::size_t capture_size = 100;
    std::size_t recapture_size = 100;
    int max_recruits = 3;
    int min_degree = 3;
    std::optional<int> max_degree; // defaults to population_size - 1
    RdsSeedRule rds_seed_rule = RdsSeedRule::Uniform;
    std::uint64_t seed = 0;

    int resolved_max_degree() const {
        return max_degree ? *max_degree : static_cast<int>(population_size) - 1;
    }

    void validate() const {
        if (exponent_grid.empty())
            throw InvalidSpec("exponent grid is empty");
        if (networks_per_exponent < 1 || runs_per_network < 1)
            throw InvalidSpec("network and run counts must be at least 1");
        if (capture_size < 1 || capture_size > population_size || recapture_size < 1 ||
            recapture_size > population_size)
            throw SampleTooLarge("stage sizes must lie in [1, N]");
        PowerLawSpec probe{exponent_grid.front(), min_degree, resolved_max_degree()};
        for (double exponent : exponent_grid) {
            probe.exponent = exponent;
            probe.validate();
        }
    }
};

struct SweepRow {
    double exponent = 0.0;
    double naive_mean = 0.0;
    double naive_std = 0.0;
    double naive_median = 0.0;
    double adjusted_mean = 0.0;
    double adjusted_std = 0.0;
    double adjusted_median = 0.0;
    std::size_t degenerate_runs = 0;
    std::size_t runs_used = 0;
};

struct SweepSummary {
    SweepConfig config;
    std::vector<SweepRow> rows;
};

namespace detail {

struct RunOutcome {
    double naive = -1.0; // -1 marks a degenerate run
    double adjusted = -1.0;
};

/// One sweep run: generate nothing, sample both stages on a prebuilt network.
inline RunOutcome sweep_run(const Network& net, const std::vector<int>& realized_degrees,
                            const SweepConfig& config, std::uint64_t capture_seed, std::uint64_t rds_seed) {
    const SampleMembership capture =
        sample_degree_biased(std::span<const int>(realized_degrees), config.capture_size, capture_seed);
    RdsOptions rds_options;
    rds_options.max_recruits = config.max_recruits;
    rds_options.seed_rule = config.rds_seed_rule;
    const RdsResult rds = simulate_rds(net, config.recapture_size, rds_options, rds_seed);

    const CrossCounts counts = cross_tabulate(capture, rds.membership);
    if (counts.in_both == 0)
        return {};
    RunOutcome out;
    out.naive = naive_lp(counts).estimate;

    std::vector<double> weights;
    weights.reserve(config.recapture_size);
    for (std::int32_t id : rds.membership.members())
        weights.push_back(static_cast<double>(realized_degrees[static_cast<std::size_t>(id)]));
    out.adjusted = adjusted_ht(make_observation(capture, rds.membership, weights)).estimate;
    return out;
}

} // namespace detail

/// Runs the full grid. Cells (exponent x network) execute independently on up
/// to `jobs` threads; every run derives its own seed from
/// (master, exponent index, network index, run index), so results are
/// identical for any worker count and any cell can be replayed alone.
inline SweepSummary run_lambda_sweep(const SweepConfig& config, unsigned jobs = 1) {
    config.validate();
    const std::size_t n_exponents = config.exponent_grid.size();
    const std::size_t cells = n_exponents * config.networks_per_exponent;
    std::vector<std::vector<detail::RunOutcome>> outcomes(cells);

    parallel_for_index(cells, jobs, [&](std::size_t cell) {
        const std::size_t li = cell / config.networks_per_exponent;
        const std::size_t gi = cell % config.networks_per_exponent;
        const PowerLawSpec spec{config.exponent_grid[li], config.min_degree, config.resolved_max_degree()};
        const std::vector<int> degrees = sample_power_law_degrees(
            config.population_size, spec, derive_seed(config.seed, {stream::degrees, li, gi}));
        const Network net = build_configuration_network(degrees, derive_seed(config.seed, {stream::network, li, gi}));
        const std::vector<int> realized = net.degrees();

        std::vector<detail::RunOutcome>& cell_runs = outcomes[cell];
        cell_runs.resize(config.runs_per_network);
        for (std::size_t run = 0; run < config.runs_per_network; ++run) {
            cell_runs[run] = detail::sweep_run(net, realized, config,
                                               derive_seed(config.seed, {stream::capture, li, gi, run}),
                                               derive_seed(config.seed, {stream::rds, li, gi, run}));
        }
    });

    SweepSummary summary;
    summary.config = config;
    summary.rows.reserve(n_exponents);
    for (std::size_t li = 0; li < n_exponents; ++li) {
        SweepRow row;
        row.exponent = config.exponent_grid[li];
        RunningStats naive_stats, adjusted_stats;
        std::vector<double> naive_values, adjusted_values;
        for (std::size_t gi = 0; gi < config.networks_per_exponent; ++gi) {
            for (const detail::RunOutcome& run : outcomes[li * config.networks_per_exponent + gi]) {
                if (run.naive < 0.0) {
                    ++row.degenerate_runs;
                    continue;
                }
                naive_stats.add(run.naive);
                adjusted_stats.add(run.adjusted);
                naive_values.push_back(run.naive);
                adjusted_values.push_back(run.adjusted);
            }
        }
        row.naive_mean = naive_stats.mean();
        row.naive_std = naive_stats.std_dev();
        row.naive_median = median(naive_values);
        row.adjusted_mean = adjusted_stats.mean();
        row.adjusted_std = adjusted_stats.std_dev();
        row.adjusted_median = median(adjusted_values);
        row.runs_used = naive_stats.count();
        summary.rows.push_back(row);
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Stratum-as-capture experiment: one stratum is the capture "record list",
// the recapture is a bootstrap subsample of a fixed chain-referral sample.
// ---------------------------------------------------------------------------

struct StratumSummary {
    std::string label;
    std::size_t stratum_size = 0;
    std::size_t rds_size = 0;
    double naive_mean = 0.0;
    double naive_std = 0.0;
    double adjusted_mean = 0.0;
    double adjusted_std = 0.0;
    std::size_t degenerate_runs = 0;
    std::size_t replicates_used = 0;
};

inline StratumSummary run_stratum_experiment(const Population& pop, const Network& net, const std::string& label,
                                             std::size_t rds_size, std::size_t recapture_size,
                                             std::size_t replicates, std::uint64_t seed, int max_recruits = 3) {
    if (pop.size() != net.node_count())
        throw SizeMismatch("population and network sizes differ");
    const SampleMembership capture = stratum_capture(pop, label);
    RdsOptions rds_options;
    rds_options.max_recruits = max_recruits;
    const RdsResult rds = simulate_rds(net, rds_size, rds_options, derive_seed(seed, {stream::rds}));

    StratumSummary summary;
    summary.label = label;
    summary.stratum_size = capture.count();
    summary.rds_size = rds_size;
    RunningStats naive_stats, adjusted_stats;
    for (std::size_t r = 0; r < replicates; ++r) {
        const SampleMembership recapture =
            recapture_size < rds_size
                ? bootstrap_subsample(rds.membership, recapture_size, derive_seed(seed, {stream::bootstrap, r}))
                : rds.membership;
        const CrossCounts counts = cross_tabulate(capture, recapture);
        if (counts.in_both == 0) {
            ++summary.degenerate_runs;
            continue;
        }
        naive_stats.add(naive_lp(counts).estimate);
        const std::vector<double> weights = weights_for(recapture, pop, Covariate::Degree);
        adjusted_stats.add(adjusted_ht(make_observation(capture, recapture, weights)).estimate);
    }
    if (naive_stats.count() == 0)
        throw AllRunsDegenerate("every bootstrap replicate missed the stratum");
    summary.naive_mean = naive_stats.mean();
    summary.naive_std = naive_stats.std_dev();
    summary.adjusted_mean = adjusted_stats.mean();
    summary.adjusted_std = adjusted_stats.std_dev();
    summary.replicates_used = naive_stats.count();
    return summary;
}

// ---------------------------------------------------------------------------
// Capture-size sweep: growing capture samples (uniform and degree-biased)
// against a bootstrap recapture from a fixed pool.
// ---------------------------------------------------------------------------

struct CaptureSizeRow {
    std::size_t capture_size = 0;
    SchemeKind capture_kind = SchemeKind::Uniform;
    double naive_mean = 0.0;
    double naive_std = 0.0;
    double adjusted_mean = 0.0;
    double adjusted_std = 0.0;
    std::size_t degenerate_runs = 0;
    std::size_t replicates_used = 0;
};

/// Every capture size runs under both capture kinds so the two curves come
/// from the same recapture randomness.
inline std::vector<CaptureSizeRow> run_capture_size_sweep(const Population& pop,
                                                          const std::vector<std::size_t>& capture_sizes,
                                                          const SampleMembership& recapture_pool,
                                                          std::size_t recapture_size, std::size_t replicates,
                                                          std::uint64_t seed, unsigned jobs = 1) {
    if (recapture_pool.population_size != pop.size())
        throw SizeMismatch("recapture pool and population sizes differ");
    for (std::size_t size : capture_sizes)
        if (size < 1 || size > pop.size())
            throw SampleTooLarge("capture size outside [1, N]");

    const SchemeKind kinds[2] = {SchemeKind::Uniform, SchemeKind::DegreeProportional};
    std::vector<CaptureSizeRow> rows(capture_sizes.size() * 2);
    parallel_for_index(rows.size(), jobs, [&](std::size_t idx) {
        const std::size_t si = idx / 2;
        const SchemeKind kind = kinds[idx % 2];
        CaptureSizeRow row;
        row.capture_size = capture_sizes[si];
        row.capture_kind = kind;
        RunningStats naive_stats, adjusted_stats;
        for (std::size_t r = 0; r < replicates; ++r) {
            const std::uint64_t capture_seed = derive_seed(seed, {stream::capture, si, static_cast<std::uint64_t>(kind), r});
            const SampleMembership capture =
                kind == SchemeKind::Uniform
                    ? sample_uniform(pop, row.capture_size, capture_seed)
                    : sample_degree_biased(pop, row.capture_size, capture_seed);
            // recapture seed ignores the capture kind: both curves share it
            const SampleMembership recapture = bootstrap_subsample(
                recapture_pool, recapture_size, derive_seed(seed, {stream::bootstrap, si, r}));
            const CrossCounts counts = cross_tabulate(capture, recapture);
            if (counts.in_both == 0) {
                ++row.degenerate_runs;
                continue;
            }
            naive_stats.add(naive_lp(counts).estimate);
            const std::vector<double> weights = weights_for(recapture, pop, Covariate::Degree);
            adjusted_stats.add(adjusted_ht(make_observation(capture, recapture, weights)).estimate);
        }
        row.naive_mean = naive_stats.mean();
        row.naive_std = naive_stats.std_dev();
        row.adjusted_mean = adjusted_stats.mean();
        row.adjusted_std = adjusted_stats.std_dev();
        row.replicates_used = naive_stats.count();
        rows[idx] = row;
    });
    return rows;
}

// ---------------------------------------------------------------------------
// Count-table estimation from published aggregates.
// ---------------------------------------------------------------------------

struct CountTableRow {
    std::string group;
    std::int64_t capture_size = 0;
    std::int64_t recapture_size = 0;
    std::int64_t recaptured = 0;
    std::vector<Member> members; // optional per-member weights for the adjusted estimate

    void validate() const {
        if (capture_size < 0 || recapture_size < 0 || recaptured < 0)
            throw SizeMismatch("table counts must be non-negative");
        if (recaptured > std::min(capture_size, recapture_size))
            throw SizeMismatch("row '" + group + "': recaptured exceeds a stage size");
        if (!members.empty()) {
            if (static_cast<std::int64_t>(members.size()) != recapture_size)
                throw SizeMismatch("row '" + group + "': one weight per second-stage member required");
            std::int64_t flagged = 0;
            for (const Member& m : members)
                flagged += m.in_first ? 1 : 0;
            if (flagged != recaptured)
                throw SizeMismatch("row '" + group + "': in-first flags disagree with the recaptured count");
        }
    }
};

struct CountTableResult {
    std::string group;
    std::optional<double> naive;
    std::optional<double> adjusted;
    bool degenerate = false; // recaptured == 0: row flagged, not fatal
};

inline std::vector<CountTableResult> run_count_table(const std::vector<CountTableRow>& rows) {
    std::vector<CountTableResult> results;
    results.reserve(rows.size());
    for (const CountTableRow& row : rows) {
        row.validate();
        CountTableResult result;
        result.group = row.group;
        if (row.recaptured == 0) {
            result.degenerate = true;
            results.push_back(result);
            continue;
        }
        result.naive = naive_lp(CrossCounts{row.recaptured, row.capture_size - row.recaptured,
                                            row.recapture_size - row.recaptured})
                           .estimate;
        if (!row.members.empty()) {
            RecaptureObservation obs{row.capture_size, row.members};
            result.adjusted = adjusted_ht(obs).estimate;
        }
        results.push_back(result);
    }
    return results;
}

} // namespace recap
