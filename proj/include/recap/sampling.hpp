#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recap/errors.hpp"
#include "recap/estimators.hpp"
#include "recap/population.hpp"
#include "recap/rng.hpp"

namespace recap {

enum class Stage { Capture, Recapture };

/// Per-individual inclusion flags for one sampling stage.
struct SampleMembership {
    std::size_t population_size = 0;
    std::vector<std::uint8_t> flags;
    Stage stage = Stage::Capture;

    SampleMembership() = default;
    SampleMembership(std::size_t n, Stage s) : population_size(n), flags(n, 0), stage(s) {}

    std::size_t count() const {
        std::size_t c = 0;
        for (std::uint8_t f : flags)
            c += f;
        return c;
    }

    bool contains(std::size_t id) const { return flags[id] != 0; }

    /// Member ids in ascending order.
    std::vector<std::int32_t> members() const {
        std::vector<std::int32_t> out;
        out.reserve(count());
        for (std::size_t i = 0; i < flags.size(); ++i)
            if (flags[i])
                out.push_back(static_cast<std::int32_t>(i));
        return out;
    }
};

/// One recruitment event; seeds carry recruiter = -1 and wave 0.
struct Recruitment {
    std::int32_t recruit = 0;
    std::int32_t recruiter = -1;
    std::int32_t wave = 0;
    std::int32_t tree = 0;
};

struct RecruitmentForest {
    std::vector<Recruitment> nodes;

    std::size_t tree_count() const {
        std::int32_t max_tree = -1;
        for (const Recruitment& r : nodes)
            max_tree = std::max(max_tree, r.tree);
        return static_cast<std::size_t>(max_tree + 1);
    }

    /// Largest number of recruits attributed to a single individual.
    std::size_t max_recruits_used() const {
        std::vector<std::size_t> used;
        for (const Recruitment& r : nodes) {
            if (r.recruiter < 0)
                continue;
            if (static_cast<std::size_t>(r.recruiter) >= used.size())
                used.resize(static_cast<std::size_t>(r.recruiter) + 1, 0);
            ++used[static_cast<std::size_t>(r.recruiter)];
        }
        std::size_t best = 0;
        for (std::size_t u : used)
            best = std::max(best, u);
        return best;
    }
};

enum class SchemeKind { Uniform, DegreeProportional, RdsWalk, StratumList };

/// Declarative description of one sampling stage, used by experiment configs.
struct SamplingScheme {
    SchemeKind kind = SchemeKind::Uniform;
    std::size_t size = 0;
    int max_recruits = 3;      // RdsWalk only
    std::string stratum;       // StratumList only
};

/// Fenwick tree over weights supporting draw-and-remove; one draw costs
/// O(log n). Repeated draws realize successive sampling without replacement
/// with probability proportional to weight among the not-yet-drawn.
class WeightedIndexSampler {
public:
    explicit WeightedIndexSampler(std::span<const double> weights)
        : size_(weights.size()), tree_(weights.size() + 1, 0.0), weight_(weights.begin(), weights.end()) {
        for (std::size_t i = 0; i < size_; ++i) {
            if (!(weights[i] > 0.0))
                throw NonPositiveWeight("sampling weight " + std::to_string(i) + " is not positive");
            add(i, weights[i]);
            total_ += weights[i];
        }
    }

    double total_weight() const { return total_; }

    std::size_t draw_and_remove(Rng& rng) {
        const double u = rng.unit() * total_;
        const std::size_t idx = lower_index(u);
        add(idx, -weight_[idx]);
        total_ -= weight_[idx];
        weight_[idx] = 0.0;
        return idx;
    }

private:
    void add(std::size_t i, double delta) {
        for (std::size_t k = i + 1; k <= size_; k += k & (~k + 1))
            tree_[k] += delta;
    }

    // smallest live index whose inclusive prefix sum exceeds target
    std::size_t lower_index(double target) const {
        std::size_t pos = 0;
        std::size_t mask = 1;
        while ((mask << 1) <= size_)
            mask <<= 1;
        for (; mask > 0; mask >>= 1) {
            const std::size_t next = pos + mask;
            if (next <= size_ && tree_[next] <= target) {
                target -= tree_[next];
                pos = next;
            }
        }
        // float drift in total_ can land the search on a removed slot or one
        // past the end; snap to the nearest live index
        for (std::size_t p = pos; p < size_; ++p)
            if (weight_[p] > 0.0)
                return p;
        for (std::size_t p = std::min(pos, size_ - 1);; --p) {
            if (weight_[p] > 0.0)
                return p;
            if (p == 0)
                break;
        }
        throw std::logic_error("draw from an empty weighted sampler");
    }

    std::size_t size_;
    std::vector<double> tree_;
    std::vector<double> weight_;
    double total_ = 0.0;
};

/// Uniform n-subset of {0, ..., population_size-1}.
inline SampleMembership sample_uniform(std::size_t population_size, std::size_t n, std::uint64_t seed,
                                       Stage stage = Stage::Capture) {
    if (n < 1 || n > population_size)
        throw SampleTooLarge("requested " + std::to_string(n) + " of " + std::to_string(population_size));
    Rng rng(seed);
    std::vector<std::int32_t> ids(population_size);
    std::iota(ids.begin(), ids.end(), 0);
    SampleMembership out(population_size, stage);
    // partial Fisher-Yates: the first n positions become the sample
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(population_size - i));
        std::swap(ids[i], ids[j]);
        out.flags[static_cast<std::size_t>(ids[i])] = 1;
    }
    return out;
}

inline SampleMembership sample_uniform(const Population& pop, std::size_t n, std::uint64_t seed,
                                       Stage stage = Stage::Capture) {
    return sample_uniform(pop.size(), n, seed, stage);
}

/// Successive sampling without replacement: draw an unsampled individual with
/// probability proportional to its degree among the unsampled, n times.
/// First-draw inclusion probabilities are exactly d_i / sum(d).
inline SampleMembership sample_degree_biased(std::span<const int> degrees, std::size_t n, std::uint64_t seed,
                                             Stage stage = Stage::Capture) {
    const std::size_t population_size = degrees.size();
    if (n < 1 || n > population_size)
        throw SampleTooLarge("requested " + std::to_string(n) + " of " + std::to_string(population_size));
    std::vector<double> weights(population_size);
    for (std::size_t i = 0; i < population_size; ++i)
        weights[i] = static_cast<double>(degrees[i]);
    WeightedIndexSampler sampler(weights);
    Rng rng(seed);
    SampleMembership out(population_size, stage);
    for (std::size_t k = 0; k < n; ++k)
        out.flags[sampler.draw_and_remove(rng)] = 1;
    return out;
}

inline SampleMembership sample_degree_biased(const Population& pop, std::size_t n, std::uint64_t seed,
                                             Stage stage = Stage::Capture) {
    return sample_degree_biased(std::span<const int>(pop.degrees), n, seed, stage);
}

enum class RdsSeedRule { Uniform, DegreeProportional };

struct RdsOptions {
    int max_recruits = 3;
    int max_restarts = 10;
    RdsSeedRule seed_rule = RdsSeedRule::Uniform;
    std::optional<std::int32_t> forced_first_seed; // test hook
};

struct RdsResult {
    SampleMembership membership;
    RecruitmentForest forest;
};

/// Chain-referral sample on an explicit network. The frontier is the multiset
/// of (recruiter, candidate) pairs over sampled recruiters that still have
/// recruitment budget; one pair is drawn uniformly per step, which recruits
/// the candidate and attributes it to that recruiter. When the frontier dries
/// up a fresh seed starts a new tree, up to max_restarts times.
inline RdsResult simulate_rds(const Network& net, std::size_t target_size, const RdsOptions& options,
                              std::uint64_t seed) {
    const std::size_t n = net.node_count();
    if (target_size < 1 || target_size > n)
        throw SampleTooLarge("requested " + std::to_string(target_size) + " of " + std::to_string(n));

    Rng rng(seed);
    RdsResult result{SampleMembership(n, Stage::Recapture), {}};
    std::vector<std::uint8_t>& sampled = result.membership.flags;
    std::vector<std::int32_t> recruits_used(n, 0);
    std::vector<std::int32_t> wave(n, 0);
    std::vector<std::pair<std::int32_t, std::int32_t>> frontier; // (recruiter, candidate)
    std::size_t count = 0;
    int restarts = -1;
    std::int32_t tree = -1;

    auto push_neighbors = [&](std::int32_t node) {
        for (std::int32_t nbr : net.adjacency[static_cast<std::size_t>(node)])
            if (!sampled[static_cast<std::size_t>(nbr)])
                frontier.emplace_back(node, nbr);
    };

    auto pick_seed = [&]() -> std::int32_t {
        if (result.forest.nodes.empty() && options.forced_first_seed)
            return *options.forced_first_seed;
        std::vector<std::int32_t> unsampled;
        unsampled.reserve(n - count);
        for (std::size_t i = 0; i < n; ++i)
            if (!sampled[i])
                unsampled.push_back(static_cast<std::int32_t>(i));
        if (options.seed_rule == RdsSeedRule::Uniform)
            return unsampled[static_cast<std::size_t>(rng.below(unsampled.size()))];
        std::vector<double> w(unsampled.size());
        for (std::size_t i = 0; i < unsampled.size(); ++i)
            w[i] = std::max(1.0, static_cast<double>(net.degree(static_cast<std::size_t>(unsampled[i]))));
        WeightedIndexSampler sampler(w);
        return unsampled[sampler.draw_and_remove(rng)];
    };

    while (count < target_size) {
        bool recruited = false;
        while (!frontier.empty()) {
            const std::size_t i = static_cast<std::size_t>(rng.below(frontier.size()));
            const auto [recruiter, candidate] = frontier[i];
            frontier[i] = frontier.back();
            frontier.pop_back();
            if (sampled[static_cast<std::size_t>(candidate)] ||
                recruits_used[static_cast<std::size_t>(recruiter)] >= options.max_recruits)
                continue; // stale entry
            sampled[static_cast<std::size_t>(candidate)] = 1;
            ++count;
            ++recruits_used[static_cast<std::size_t>(recruiter)];
            wave[static_cast<std::size_t>(candidate)] = wave[static_cast<std::size_t>(recruiter)] + 1;
            result.forest.nodes.push_back(
                Recruitment{candidate, recruiter, wave[static_cast<std::size_t>(candidate)], tree});
            if (count < target_size)
                push_neighbors(candidate);
            recruited = true;
            break;
        }
        if (recruited)
            continue;
        ++restarts;
        if (restarts > options.max_restarts)
            throw Exhausted("recruitment frontier empty after " + std::to_string(options.max_restarts) +
                            " restarts with " + std::to_string(count) + " of " + std::to_string(target_size) +
                            " sampled");
        const std::int32_t s = pick_seed();
        ++tree;
        sampled[static_cast<std::size_t>(s)] = 1;
        ++count;
        wave[static_cast<std::size_t>(s)] = 0;
        result.forest.nodes.push_back(Recruitment{s, -1, 0, tree});
        if (count < target_size)
            push_neighbors(s);
    }
    return result;
}

inline RdsResult simulate_rds(const Network& net, std::size_t target_size, int max_recruits, std::uint64_t seed) {
    RdsOptions opt;
    opt.max_recruits = max_recruits;
    return simulate_rds(net, target_size, opt, seed);
}

/// Capture stage defined by stratum membership: everyone carrying the label.
inline SampleMembership stratum_capture(const Population& pop, const std::string& label) {
    if (!pop.has_strata())
        throw UnknownStratum("population has no stratum labels");
    SampleMembership out(pop.size(), Stage::Capture);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (pop.strata[i] == label) {
            out.flags[i] = 1;
            ++hits;
        }
    }
    if (hits == 0)
        throw UnknownStratum("no individual carries stratum label '" + label + "'");
    return out;
}

/// Uniform n-subset of an existing membership.
inline SampleMembership bootstrap_subsample(const SampleMembership& membership, std::size_t n, std::uint64_t seed,
                                            Stage stage = Stage::Recapture) {
    std::vector<std::int32_t> ids = membership.members();
    if (n < 1 || n > ids.size())
        throw SampleTooLarge("requested " + std::to_string(n) + " of " + std::to_string(ids.size()) + " members");
    Rng rng(seed);
    SampleMembership out(membership.population_size, stage);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
        std::swap(ids[i], ids[j]);
        out.flags[static_cast<std::size_t>(ids[i])] = 1;
    }
    return out;
}

/// Overlap counts between a capture and a recapture membership.
inline CrossCounts cross_tabulate(const SampleMembership& capture, const SampleMembership& recapture) {
    if (capture.population_size != recapture.population_size)
        throw SizeMismatch("memberships cover different population sizes");
    CrossCounts counts;
    for (std::size_t i = 0; i < capture.flags.size(); ++i) {
        const bool a = capture.flags[i] != 0;
        const bool b = recapture.flags[i] != 0;
        if (a && b)
            ++counts.in_both;
        else if (a)
            ++counts.first_only;
        else if (b)
            ++counts.second_only;
    }
    return counts;
}

enum class Covariate { Degree, Custom };

/// Covariate weights for the members of one membership, in ascending id
/// order. Custom covariates are per-individual vectors of length N.
inline std::vector<double> weights_for(const SampleMembership& membership, const Population& pop,
                                       Covariate covariate, std::span<const double> custom = {}) {
    if (membership.population_size != pop.size())
        throw SizeMismatch("membership and population sizes differ");
    std::vector<double> out;
    out.reserve(membership.count());
    if (covariate == Covariate::Degree) {
        if (pop.degrees.size() != membership.population_size)
            throw MissingCovariate("population carries no degrees");
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (membership.flags[i])
                out.push_back(static_cast<double>(pop.degrees[i]));
    } else {
        if (custom.size() != membership.population_size)
            throw MissingCovariate("custom covariate must provide one value per individual");
        for (std::size_t i = 0; i < pop.size(); ++i)
            if (membership.flags[i])
                out.push_back(custom[i]);
    }
    return out;
}

/// Assemble the adjusted estimator's input from the two memberships and the
/// second-stage weights (aligned with recapture.members()).
inline RecaptureObservation make_observation(const SampleMembership& capture, const SampleMembership& recapture,
                                             std::span<const double> recapture_weights) {
    if (capture.population_size != recapture.population_size)
        throw SizeMismatch("memberships cover different population sizes");
    const std::vector<std::int32_t> ids = recapture.members();
    if (recapture_weights.size() != ids.size())
        throw SizeMismatch("one weight per second-stage member required");
    RecaptureObservation obs;
    obs.first_sample_size = static_cast<std::int64_t>(capture.count());
    obs.members.reserve(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k)
        obs.members.push_back(Member{recapture_weights[k], capture.contains(static_cast<std::size_t>(ids[k]))});
    return obs;
}

} // namespace recap
