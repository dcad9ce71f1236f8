#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "recap/errors.hpp"
#include "recap/estimators.hpp"
#include "recap/rng.hpp"

namespace recap {

/// Truncated power law p_n proportional to n^(-exponent) on
/// [min_degree, max_degree], normalized to sum 1.
struct PowerLawSpec {
    double exponent = 2.5;
    int min_degree = 3;
    int max_degree = 1000;

    void validate() const {
        if (!(exponent > 1.0))
            throw InvalidSpec("power-law exponent must exceed 1");
        if (min_degree < 1)
            throw InvalidSpec("minimum degree must be at least 1");
        if (max_degree < min_degree)
            throw InvalidSpec("maximum degree below minimum degree");
    }
};

/// Normalized mass function; index i corresponds to degree min_degree + i.
inline std::vector<double> power_law_pmf(const PowerLawSpec& spec) {
    spec.validate();
    std::vector<double> pmf(static_cast<std::size_t>(spec.max_degree - spec.min_degree) + 1);
    double total = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        pmf[i] = std::pow(static_cast<double>(spec.min_degree) + static_cast<double>(i), -spec.exponent);
        total += pmf[i];
    }
    for (double& p : pmf)
        p /= total;
    return pmf;
}

/// Exact moments of the truncated distribution by direct summation.
inline DegreeMoments power_law_moments(const PowerLawSpec& spec) {
    const std::vector<double> pmf = power_law_pmf(spec);
    DegreeMoments m;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        const double d = static_cast<double>(spec.min_degree) + static_cast<double>(i);
        m.mean += d * pmf[i];
        m.second_moment += d * d * pmf[i];
    }
    return m;
}

/// n inverse-CDF draws from the truncated power law.
inline std::vector<int> sample_power_law_degrees(std::size_t n, const PowerLawSpec& spec, std::uint64_t seed) {
    if (n < 1)
        throw EmptySequence("cannot sample an empty degree sequence");
    const std::vector<double> pmf = power_law_pmf(spec);
    std::vector<double> cdf(pmf.size());
    std::partial_sum(pmf.begin(), pmf.end(), cdf.begin());
    cdf.back() = 1.0;

    Rng rng(seed);
    std::vector<int> degrees(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = rng.unit();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        degrees[k] = spec.min_degree + static_cast<int>(it - cdf.begin());
    }
    return degrees;
}

/// Simple undirected graph as adjacency lists; no self-loops, no multi-edges.
struct Network {
    std::vector<std::vector<std::int32_t>> adjacency;

    std::size_t node_count() const { return adjacency.size(); }
    int degree(std::size_t node) const { return static_cast<int>(adjacency[node].size()); }

    std::vector<int> degrees() const {
        std::vector<int> out(adjacency.size());
        for (std::size_t i = 0; i < adjacency.size(); ++i)
            out[i] = degree(i);
        return out;
    }

    std::size_t edge_count() const {
        std::size_t stubs = 0;
        for (const auto& nbrs : adjacency)
            stubs += nbrs.size();
        return stubs / 2;
    }
};

/// Erased configuration model: pair half-edges uniformly, then drop
/// self-loops and collapse multi-edges. The realized degree sequence loses a
/// little mass at high-degree nodes; callers who care should measure it on
/// the returned graph rather than trust the input sequence.
/// An odd degree total is repaired by incrementing one uniformly chosen node.
inline Network build_configuration_network(std::vector<int> degrees, std::uint64_t seed) {
    const std::size_t n = degrees.size();
    if (n == 0)
        throw EmptySequence("degree sequence is empty");
    std::int64_t stub_count = 0;
    for (int d : degrees) {
        if (d < 1)
            throw InvalidSpec("configuration model requires degrees >= 1");
        if (static_cast<std::size_t>(d) >= n)
            throw InfeasibleSequence("degree " + std::to_string(d) + " cannot be realized in a simple graph on " +
                                     std::to_string(n) + " nodes");
        stub_count += d;
    }
    Rng rng(seed);
    if (stub_count % 2 != 0) {
        const std::size_t bumped = static_cast<std::size_t>(rng.below(n));
        ++degrees[bumped];
        ++stub_count;
        if (static_cast<std::size_t>(degrees[bumped]) >= n)
            throw InfeasibleSequence("odd-sum repair pushed a degree to the node count");
    }

    std::vector<std::int32_t> stubs;
    stubs.reserve(static_cast<std::size_t>(stub_count));
    for (std::size_t i = 0; i < n; ++i)
        stubs.insert(stubs.end(), static_cast<std::size_t>(degrees[i]), static_cast<std::int32_t>(i));
    rng.shuffle(stubs);

    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    edges.reserve(stubs.size() / 2);
    for (std::size_t t = 0; t + 1 < stubs.size(); t += 2) {
        std::int32_t u = stubs[t];
        std::int32_t v = stubs[t + 1];
        if (u == v)
            continue; // erase self-loop
        if (u > v)
            std::swap(u, v);
        edges.emplace_back(u, v);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end()); // collapse multi-edges

    Network net;
    net.adjacency.resize(n);
    for (const auto& [u, v] : edges) {
        net.adjacency[u].push_back(v);
        net.adjacency[v].push_back(u);
    }
    for (auto& nbrs : net.adjacency)
        std::sort(nbrs.begin(), nbrs.end());
    return net;
}

/// Synthetic population: a degree per individual, optional stratum labels,
/// optional explicit network.
struct Population {
    std::vector<int> degrees;
    std::vector<std::string> strata; // empty until assigned; else one label per individual

    std::size_t size() const { return degrees.size(); }
    bool has_strata() const { return !strata.empty(); }
};

inline Population population_from_network(const Network& net) {
    return Population{net.degrees(), {}};
}

/// Cyclic repetition of an observed degree sequence out to target_len;
/// extends a small probe sample to a full synthetic population.
inline std::vector<int> extend_degree_sequence(const std::vector<int>& observed, std::size_t target_len) {
    if (observed.empty())
        throw EmptySequence("cannot extend an empty degree sequence");
    std::vector<int> out(target_len);
    for (std::size_t i = 0; i < target_len; ++i)
        out[i] = observed[i % observed.size()];
    return out;
}

struct StratumSpec {
    std::string label;
    std::size_t size = 0;
};

/// Random partition of the population into strata of the exact given sizes.
/// degree_rank_correlation = 0 assigns independently of degree; 1 assigns by
/// degree rank (lowest degrees into the first listed stratum); intermediate
/// values blend the two orderings.
inline void assign_strata(Population& pop, const std::vector<StratumSpec>& groups, std::uint64_t seed,
                          double degree_rank_correlation = 0.0) {
    const std::size_t n = pop.size();
    std::size_t total = 0;
    for (const StratumSpec& g : groups)
        total += g.size;
    if (total != n)
        throw SizeMismatch("stratum sizes sum to " + std::to_string(total) + ", expected " + std::to_string(n));

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (degree_rank_correlation <= 0.0) {
        rng.shuffle(order);
    } else {
        // blend the (tie-broken) degree rank with independent noise; c=1 sorts
        // purely by degree, c->0 approaches an independent assignment
        const double c = std::min(degree_rank_correlation, 1.0);
        std::vector<double> tiebreak(n);
        for (std::size_t i = 0; i < n; ++i)
            tiebreak[i] = rng.unit();
        std::vector<std::size_t> by_degree(n);
        std::iota(by_degree.begin(), by_degree.end(), 0);
        std::sort(by_degree.begin(), by_degree.end(), [&](std::size_t a, std::size_t b) {
            if (pop.degrees[a] != pop.degrees[b])
                return pop.degrees[a] < pop.degrees[b];
            return tiebreak[a] < tiebreak[b];
        });
        std::vector<double> key(n);
        for (std::size_t r = 0; r < n; ++r)
            key[by_degree[r]] = c * static_cast<double>(r) / static_cast<double>(n) + (1.0 - c) * rng.unit();
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    }

    pop.strata.assign(n, std::string{});
    std::size_t cursor = 0;
    for (const StratumSpec& g : groups) {
        for (std::size_t k = 0; k < g.size; ++k)
            pop.strata[order[cursor++]] = g.label;
    }
}

inline void assign_strata(Population& pop, const std::vector<std::size_t>& sizes, std::uint64_t seed,
                          double degree_rank_correlation = 0.0) {
    std::vector<StratumSpec> groups;
    groups.reserve(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i)
        groups.push_back(StratumSpec{"s" + std::to_string(i), sizes[i]});
    assign_strata(pop, groups, seed, degree_rank_correlation);
}

/// Rounded-normal degrees clamped below at min_degree; a quick stand-in for
/// survey populations whose reported degrees look roughly Gaussian.
inline std::vector<int> discretized_normal_degrees(std::size_t n, double mean, double sd, int min_degree,
                                                   std::uint64_t seed) {
    if (n < 1)
        throw EmptySequence("cannot sample an empty degree sequence");
    if (min_degree < 1)
        throw InvalidSpec("minimum degree must be at least 1");
    Rng rng(seed);
    std::vector<int> degrees(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long long d = std::llround(rng.normal(mean, sd));
        degrees[i] = static_cast<int>(std::max<long long>(d, min_degree));
    }
    return degrees;
}

} // namespace recap
