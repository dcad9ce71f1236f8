#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recap/errors.hpp"

namespace recap {

/// Overlap counts of a two-stage study: individuals seen in both stages,
/// in the first only, and in the second only.
struct CrossCounts {
    std::int64_t in_both = 0;
    std::int64_t first_only = 0;
    std::int64_t second_only = 0;

    std::int64_t first_size() const { return first_only + in_both; }
    std::int64_t second_size() const { return second_only + in_both; }

    void validate() const {
        if (in_both < 0 || first_only < 0 || second_only < 0)
            throw SizeMismatch("cross counts must be non-negative");
    }
};

/// One second-stage member: its covariate weight and whether it was also
/// captured in the first stage.
struct Member {
    double weight = 1.0;
    bool in_first = false;
};

/// The minimal data the adjusted estimator needs: the first-stage count plus
/// weight/recapture flags for second-stage members only. Covariates of
/// first-stage individuals that were never recaptured are not required.
struct RecaptureObservation {
    std::int64_t first_sample_size = 0;
    std::vector<Member> members;

    std::int64_t second_sample_size() const { return static_cast<std::int64_t>(members.size()); }

    std::int64_t recaptured() const {
        std::int64_t n = 0;
        for (const Member& m : members)
            n += m.in_first ? 1 : 0;
        return n;
    }

    CrossCounts cross_counts() const {
        const std::int64_t a11 = recaptured();
        if (a11 > first_sample_size)
            throw SizeMismatch("more recaptured members than the first-stage size");
        return CrossCounts{a11, first_sample_size - a11, second_sample_size() - a11};
    }
};

/// Mean and second moment of a degree (or weight) distribution.
struct DegreeMoments {
    double mean = 0.0;
    double second_moment = 0.0;

    /// m2/z^2; 1 for constant degrees, larger the heavier the tail.
    double heterogeneity() const { return second_moment / (mean * mean); }
};

enum class EstimatorKind { NaiveLp, AdjustedHt };

inline const char* to_string(EstimatorKind kind) {
    return kind == EstimatorKind::NaiveLp ? "naive" : "adjusted";
}

/// Inverse-weight sums over the second-stage sample, split by recapture status.
struct WeightSums {
    double in_both = 0.0;     // sum of 1/weight over doubly captured members
    double second_only = 0.0; // sum of 1/weight over members seen only in stage two
};

struct EstimateReport {
    double estimate = 0.0;
    EstimatorKind kind = EstimatorKind::NaiveLp;
    CrossCounts counts;
    std::optional<WeightSums> weight_sums;
};

/// Lincoln-Petersen estimate S1*S2/a11. Assumes homogeneous catchability;
/// biased low when catchability is positively correlated across stages.
inline EstimateReport naive_lp(const CrossCounts& counts) {
    counts.validate();
    if (counts.in_both == 0)
        throw ZeroRecapture("no individual was captured twice; the naive estimate is undefined");
    const double s1 = static_cast<double>(counts.first_size());
    const double s2 = static_cast<double>(counts.second_size());
    return EstimateReport{s1 * s2 / static_cast<double>(counts.in_both), EstimatorKind::NaiveLp, counts, std::nullopt};
}

/// Generalized Horvitz-Thompson estimate
///   S1 * (sum over second stage of 1/w) / (sum over doubly captured of 1/w).
/// Weights only need to be proportional to second-stage inclusion
/// probabilities; the ratio is invariant under rescaling them.
inline EstimateReport adjusted_ht(const RecaptureObservation& obs) {
    if (obs.first_sample_size < 1)
        throw SizeMismatch("first sample size must be at least 1");
    WeightSums sums;
    for (std::size_t i = 0; i < obs.members.size(); ++i) {
        const Member& m = obs.members[i];
        if (!(m.weight > 0.0))
            throw NonPositiveWeight("member " + std::to_string(i) + " has non-positive weight");
        if (m.in_first)
            sums.in_both += 1.0 / m.weight;
        else
            sums.second_only += 1.0 / m.weight;
    }
    if (sums.in_both == 0.0)
        throw ZeroRecapture("no second-stage member was seen in the first stage");
    const double s1 = static_cast<double>(obs.first_sample_size);
    const double estimate = s1 * (sums.in_both + sums.second_only) / sums.in_both;
    return EstimateReport{estimate, EstimatorKind::AdjustedHt, obs.cross_counts(), sums};
}

/// True iff rescaling every weight by c leaves the adjusted estimate
/// unchanged to 1e-12 relative. Exposes the homogeneity of the estimator.
inline bool adjusted_ht_scaled_invariance_check(const RecaptureObservation& obs, double scale) {
    if (!(scale > 0.0))
        throw NonPositiveWeight("scale factor must be positive");
    const double base = adjusted_ht(obs).estimate;
    RecaptureObservation scaled = obs;
    for (Member& m : scaled.members)
        m.weight *= scale;
    const double rescaled = adjusted_ht(scaled).estimate;
    return std::abs(rescaled - base) <= 1e-12 * std::abs(base);
}

/// Mean and mean-of-squares of a degree sequence. Checks the Jensen relation
/// m2 >= z^2, which every distribution satisfies.
inline DegreeMoments degree_moments(std::span<const int> degrees) {
    if (degrees.empty())
        throw EmptySequence("degree sequence is empty");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int d : degrees) {
        if (d < 1)
            throw InvalidSpec("degrees must be positive");
        const double x = static_cast<double>(d);
        sum += x;
        sum_sq += x * x;
    }
    const double n = static_cast<double>(degrees.size());
    DegreeMoments m{sum / n, sum_sq / n};
    if (m.second_moment < m.mean * m.mean * (1.0 - 1e-12))
        throw std::logic_error("second moment below squared mean");
    return m;
}

inline DegreeMoments degree_moments(const std::vector<int>& degrees) {
    return degree_moments(std::span<const int>(degrees));
}

/// Same as degree_moments for real-valued covariate weights.
inline DegreeMoments moments_of(std::span<const double> weights) {
    if (weights.empty())
        throw EmptySequence("weight sequence is empty");
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double w : weights) {
        if (!(w > 0.0))
            throw NonPositiveWeight("weights must be positive");
        sum += w;
        sum_sq += w * w;
    }
    const double n = static_cast<double>(weights.size());
    return DegreeMoments{sum / n, sum_sq / n};
}

struct LpExpectationBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Sandwich for the expected naive estimate under degree-proportional
/// two-stage sampling: Jensen gives the lower bound (z^2/m2)*N, the
/// Kantorovich inequality the upper one with S = min(S1, S2).
inline LpExpectationBounds lp_expectation_bounds(std::int64_t population_size, const DegreeMoments& moments,
                                                 std::int64_t s1, std::int64_t s2) {
    if (population_size < 1 || s1 < 1 || s2 < 1)
        throw SizeMismatch("population and sample sizes must be at least 1");
    if (!(moments.mean > 0.0))
        throw InvalidSpec("mean degree must be positive");
    const double s = static_cast<double>(std::min(s1, s2));
    const double base = moments.mean * moments.mean / moments.second_moment * static_cast<double>(population_size);
    return LpExpectationBounds{base, (s + 1.0) * (s + 1.0) / (4.0 * s) * base};
}

} // namespace recap
