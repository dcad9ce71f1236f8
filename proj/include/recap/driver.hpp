#pragma once

// Config-file driven entry points shared by the CLI and the test suite:
// JSON schemas for the sweep and the theory-check battery, plus report
// serialization. Unknown config keys are hard errors so a typo cannot
// silently change an experiment.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "recap/analysis.hpp"
#include "recap/csv.hpp"
#include "recap/errors.hpp"
#include "recap/experiments.hpp"
#include "recap/io.hpp"
#include "recap/version.hpp"

namespace recap {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void require_keys(const json& j, const std::string& context, const std::vector<std::string>& allowed) {
    if (!j.is_object())
        throw ConfigError(context + ": expected an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const std::string& key : allowed)
            known = known || key == item.key();
        if (!known)
            throw ConfigError(context + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key))
        return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

template <class T>
T get_required(const json& j, const std::string& context, const std::string& key) {
    if (!j.contains(key))
        throw ConfigError(context + ": missing required key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(context + ": key '" + key + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Covariate weight specs
// ---------------------------------------------------------------------------

struct WeightSpec {
    std::string kind = "constant"; // constant | two_point | power_law | degrees_csv
    double low = 1.0;
    double high = 10.0;
    double high_fraction = 0.1;
    PowerLawSpec power_law;
    std::string path;
};

inline WeightSpec parse_weight_spec(const json& j, const std::string& context) {
    WeightSpec spec;
    require_keys(j, context,
                 {"kind", "low", "high", "high_fraction", "exponent", "min_degree", "max_degree", "path"});
    spec.kind = get_required<std::string>(j, context, "kind");
    if (spec.kind == "constant") {
        require_keys(j, context, {"kind"});
    } else if (spec.kind == "two_point") {
        spec.low = get_or(j, "low", 1.0);
        spec.high = get_or(j, "high", 10.0);
        spec.high_fraction = get_or(j, "high_fraction", 0.1);
        if (!(spec.low > 0.0) || !(spec.high > 0.0))
            throw ConfigError(context + ": two-point weights must be positive");
        if (spec.high_fraction < 0.0 || spec.high_fraction > 1.0)
            throw ConfigError(context + ": high_fraction must lie in [0, 1]");
    } else if (spec.kind == "power_law") {
        spec.power_law.exponent = get_required<double>(j, context, "exponent");
        spec.power_law.min_degree = get_or(j, "min_degree", 3);
        spec.power_law.max_degree = get_required<int>(j, context, "max_degree");
        spec.power_law.validate();
    } else if (spec.kind == "degrees_csv") {
        spec.path = get_required<std::string>(j, context, "path");
    } else {
        throw ConfigError(context + ": unknown weight kind '" + spec.kind + "'");
    }
    return spec;
}

inline std::vector<double> make_weights(const WeightSpec& spec, std::size_t population_size, std::uint64_t seed) {
    if (spec.kind == "constant")
        return std::vector<double>(population_size, 1.0);
    if (spec.kind == "two_point") {
        std::vector<double> w(population_size, spec.low);
        const std::size_t highs = static_cast<std::size_t>(
            std::llround(spec.high_fraction * static_cast<double>(population_size)));
        for (std::size_t i = 0; i < highs && i < population_size; ++i)
            w[i] = spec.high;
        return w;
    }
    if (spec.kind == "power_law") {
        const std::vector<int> degrees = sample_power_law_degrees(population_size, spec.power_law, seed);
        return std::vector<double>(degrees.begin(), degrees.end());
    }
    const std::vector<int> degrees = read_degree_csv(spec.path);
    if (degrees.size() != population_size)
        throw ConfigError("degrees file '" + spec.path + "' holds " + std::to_string(degrees.size()) +
                          " rows, population size is " + std::to_string(population_size));
    return std::vector<double>(degrees.begin(), degrees.end());
}

// ---------------------------------------------------------------------------
// Sweep config
// ---------------------------------------------------------------------------

inline SweepConfig parse_sweep_config(const json& j) {
    require_keys(j, "sweep config",
                 {"seed", "lambda_grid", "population_size", "capture_size", "recapture_size", "networks_per_lambda",
                  "runs_per_network", "max_recruits", "min_degree", "max_degree", "rds_seed_rule"});
    SweepConfig config;
    config.seed = get_required<std::uint64_t>(j, "sweep config", "seed");
    config.exponent_grid = get_or(j, "lambda_grid", default_exponent_grid());
    config.population_size = get_or<std::size_t>(j, "population_size", 2500);
    config.capture_size = get_or<std::size_t>(j, "capture_size", 100);
    config.recapture_size = get_or<std::size_t>(j, "recapture_size", 100);
    config.networks_per_exponent = get_or<std::size_t>(j, "networks_per_lambda", 20);
    config.runs_per_network = get_or<std::size_t>(j, "runs_per_network", 50);
    config.max_recruits = get_or(j, "max_recruits", 3);
    config.min_degree = get_or(j, "min_degree", 3);
    if (j.contains("max_degree"))
        config.max_degree = get_required<int>(j, "sweep config", "max_degree");
    const std::string rule = get_or<std::string>(j, "rds_seed_rule", "uniform");
    if (rule == "uniform")
        config.rds_seed_rule = RdsSeedRule::Uniform;
    else if (rule == "degree")
        config.rds_seed_rule = RdsSeedRule::DegreeProportional;
    else
        throw ConfigError("sweep config: rds_seed_rule must be 'uniform' or 'degree'");
    config.validate();
    return config;
}

inline json sweep_config_json(const SweepConfig& config) {
    json j;
    j["seed"] = config.seed;
    j["lambda_grid"] = config.exponent_grid;
    j["population_size"] = config.population_size;
    j["capture_size"] = config.capture_size;
    j["recapture_size"] = config.recapture_size;
    j["networks_per_lambda"] = config.networks_per_exponent;
    j["runs_per_network"] = config.runs_per_network;
    j["max_recruits"] = config.max_recruits;
    j["min_degree"] = config.min_degree;
    j["max_degree"] = config.resolved_max_degree();
    j["rds_seed_rule"] = config.rds_seed_rule == RdsSeedRule::Uniform ? "uniform" : "degree";
    return j;
}

inline json manifest_json(const json& config_echo, std::uint64_t seed) {
    json manifest;
    manifest["tool"] = "recap";
    manifest["version"] = version_string;
    manifest["seed"] = seed;
    manifest["config"] = config_echo;
    return manifest;
}

/// Sweep summary as machine-readable JSON; medians ride along as diagnostics
/// next to the contractual mean/std columns of the CSV.
inline json sweep_summary_json(const SweepSummary& summary) {
    json out;
    out["manifest"] = manifest_json(sweep_config_json(summary.config), summary.config.seed);
    json rows = json::array();
    for (const SweepRow& row : summary.rows) {
        json r;
        r["lambda"] = row.exponent;
        r["naive"] = {{"mean", row.naive_mean}, {"std", row.naive_std}, {"median", row.naive_median}};
        r["adjusted"] = {{"mean", row.adjusted_mean}, {"std", row.adjusted_std}, {"median", row.adjusted_median}};
        r["degenerate_runs"] = row.degenerate_runs;
        r["runs_used"] = row.runs_used;
        rows.push_back(r);
    }
    out["rows"] = rows;
    return out;
}

// ---------------------------------------------------------------------------
// Verify battery
// ---------------------------------------------------------------------------

struct VerifySection {
    std::size_t population_size = 0;
    double alpha1 = 0.1;
    double alpha2 = 0.1;
    std::size_t replicates = 1000;
    WeightSpec weights;
    FirstStageModel first_stage = FirstStageModel::Uniform;
    RecaptureModel recapture_model = RecaptureModel::IndependentBernoulli;
    double tolerance = 0.05;               // indifference only
    FirstStageModel first_stage_b = FirstStageModel::WeightProportional;
    std::vector<std::size_t> population_sizes; // theorem1 only
};

struct VerifyConfig {
    std::uint64_t seed = 0;
    double sigma_band = 3.0;
    std::optional<VerifySection> expected_double_captures;
    std::vector<VerifySection> sandwich;
    std::optional<VerifySection> concentration;
    std::optional<VerifySection> theorem1;
    std::optional<VerifySection> indifference;
};

inline FirstStageModel parse_first_stage(const std::string& name, const std::string& context) {
    if (name == "uniform")
        return FirstStageModel::Uniform;
    if (name == "weight_proportional")
        return FirstStageModel::WeightProportional;
    if (name == "top_slice")
        return FirstStageModel::TopSlice;
    throw ConfigError(context + ": unknown first-stage model '" + name + "'");
}

inline VerifySection parse_verify_section(const json& j, const std::string& context, bool wants_sizes = false) {
    require_keys(j, context,
                 {"population_size", "population_sizes", "alpha1", "alpha2", "replicates", "weights", "first_stage",
                  "first_stage_a", "first_stage_b", "recapture_model", "tolerance"});
    VerifySection section;
    if (wants_sizes) {
        section.population_sizes =
            get_required<std::vector<std::size_t>>(j, context, "population_sizes");
        if (section.population_sizes.empty())
            throw ConfigError(context + ": population_sizes is empty");
        section.population_size = section.population_sizes.front();
    } else {
        section.population_size = get_required<std::size_t>(j, context, "population_size");
    }
    section.alpha1 = get_or(j, "alpha1", 0.1);
    section.alpha2 = get_or(j, "alpha2", 0.1);
    section.replicates = get_or<std::size_t>(j, "replicates", 1000);
    section.weights = parse_weight_spec(
        j.contains("weights") ? j.at("weights") : json::object({{"kind", "constant"}}), context + ".weights");
    section.first_stage = parse_first_stage(
        get_or<std::string>(j, j.contains("first_stage_a") ? "first_stage_a" : "first_stage", "uniform"), context);
    section.first_stage_b =
        parse_first_stage(get_or<std::string>(j, "first_stage_b", "weight_proportional"), context);
    const std::string model = get_or<std::string>(j, "recapture_model", "independent_bernoulli");
    if (model == "independent_bernoulli")
        section.recapture_model = RecaptureModel::IndependentBernoulli;
    else if (model == "fixed_size_wor")
        section.recapture_model = RecaptureModel::FixedSizeWor;
    else
        throw ConfigError(context + ": unknown recapture model '" + model + "'");
    section.tolerance = get_or(j, "tolerance", 0.05);
    return section;
}

inline VerifyConfig parse_verify_config(const json& j) {
    require_keys(j, "verify config",
                 {"seed", "sigma_band", "expected_double_captures", "sandwich", "concentration", "theorem1",
                  "indifference"});
    VerifyConfig config;
    config.seed = get_required<std::uint64_t>(j, "verify config", "seed");
    config.sigma_band = get_or(j, "sigma_band", 3.0);
    if (config.sigma_band < 0.0)
        throw ConfigError("verify config: sigma_band must be non-negative");
    if (j.contains("expected_double_captures"))
        config.expected_double_captures =
            parse_verify_section(j.at("expected_double_captures"), "expected_double_captures");
    if (j.contains("sandwich")) {
        const json& s = j.at("sandwich");
        if (s.is_array()) {
            for (std::size_t i = 0; i < s.size(); ++i)
                config.sandwich.push_back(parse_verify_section(s.at(i), "sandwich[" + std::to_string(i) + "]"));
        } else {
            config.sandwich.push_back(parse_verify_section(s, "sandwich"));
        }
    }
    if (j.contains("concentration"))
        config.concentration = parse_verify_section(j.at("concentration"), "concentration");
    if (j.contains("theorem1"))
        config.theorem1 = parse_verify_section(j.at("theorem1"), "theorem1", /*wants_sizes=*/true);
    if (j.contains("indifference"))
        config.indifference = parse_verify_section(j.at("indifference"), "indifference");
    return config;
}

inline ScenarioConfig scenario_from_section(const VerifySection& section, std::size_t population_size,
                                            std::uint64_t seed, double sigma_band, unsigned jobs,
                                            std::uint64_t weight_stream) {
    ScenarioConfig config;
    config.population_size = population_size;
    config.alpha1 = section.alpha1;
    config.alpha2 = section.alpha2;
    config.replicates = section.replicates;
    config.first_stage = section.first_stage;
    config.recapture_model = section.recapture_model;
    config.seed = seed;
    config.sigma_band = sigma_band;
    config.jobs = jobs;
    config.weights = make_weights(section.weights, population_size, derive_seed(seed, {stream::degrees, weight_stream}));
    return config;
}

struct VerifyOutcome {
    json report;
    bool all_pass = true;
};

struct TraceSink {
    std::string directory; // empty: no traces

    void write(const std::string& name, const std::vector<double>& values) const {
        if (directory.empty())
            return;
        std::string out = "replicate,value\n";
        for (std::size_t i = 0; i < values.size(); ++i)
            out += std::to_string(i) + "," + format_double(values[i]) + "\n";
        atomic_write_file((std::filesystem::path(directory) / (name + ".csv")).string(), out);
    }
};

inline json concentration_report_json(const ConcentrationReport& r) {
    return json{{"kind", to_string(r.kind)},
                {"recapture_model", to_string(r.model)},
                {"empirical_mean", r.empirical_mean},
                {"std_error", r.std_error},
                {"theoretical_expectation", r.theoretical_expectation},
                {"deviation_threshold", r.deviation_threshold},
                {"violations", r.violations},
                {"empirical_violation_fraction", r.empirical_violation_fraction},
                {"theoretical_bound", r.theoretical_bound},
                {"replicates", r.replicates},
                {"mean_pass", r.mean_pass},
                {"deviation_pass", r.deviation_pass},
                {"pass", r.pass}};
}

/// Runs every configured check and collects one JSON block per check.
inline VerifyOutcome run_verify_battery(const VerifyConfig& config, unsigned jobs = 1,
                                        const TraceSink& traces = {}) {
    VerifyOutcome outcome;
    json checks = json::array();
    auto note = [&](json block, bool pass) {
        block["pass"] = pass;
        checks.push_back(block);
        outcome.all_pass = outcome.all_pass && pass;
    };

    if (config.expected_double_captures) {
        const VerifySection& section = *config.expected_double_captures;
        ScenarioConfig scenario = scenario_from_section(section, section.population_size,
                                                        derive_seed(config.seed, {0x10}), config.sigma_band, jobs, 0x10);
        std::vector<double> trace;
        const DoubleCaptureReport r =
            verify_expected_double_captures(scenario, traces.directory.empty() ? nullptr : &trace);
        traces.write("expected_double_captures", trace);
        note(json{{"check", "expected_double_captures"},
                  {"empirical_mean", r.empirical_mean},
                  {"std_error", r.std_error},
                  {"theoretical", r.theoretical},
                  {"replicates", r.replicates}},
             r.pass);
    }

    for (std::size_t i = 0; i < config.sandwich.size(); ++i) {
        const VerifySection& section = config.sandwich[i];
        ScenarioConfig scenario = scenario_from_section(section, section.population_size,
                                                        derive_seed(config.seed, {0x20, i}), config.sigma_band, jobs,
                                                        0x20 + i);
        std::vector<double> trace;
        const SandwichReport r = verify_lp_sandwich(scenario, traces.directory.empty() ? nullptr : &trace);
        traces.write("sandwich_" + std::to_string(i), trace);
        note(json{{"check", "sandwich"},
                  {"population_size", section.population_size},
                  {"lower", r.lower},
                  {"upper", r.upper},
                  {"empirical_mean", r.empirical_mean},
                  {"std_error", r.std_error},
                  {"replicates_used", r.replicates_used},
                  {"degenerate_runs", r.degenerate_runs}},
             r.pass);
    }

    if (config.concentration) {
        const VerifySection& section = *config.concentration;
        ScenarioConfig scenario = scenario_from_section(section, section.population_size,
                                                        derive_seed(config.seed, {0x30}), config.sigma_band, jobs, 0x30);
        for (const ConcentrationKind kind : {ConcentrationKind::Marginal, ConcentrationKind::Joint}) {
            std::vector<double> trace;
            const ConcentrationReport r =
                verify_concentration(scenario, kind, traces.directory.empty() ? nullptr : &trace);
            traces.write(std::string("concentration_") + to_string(kind), trace);
            json block = concentration_report_json(r);
            block["check"] = "concentration";
            note(block, r.pass);
        }
    }

    if (config.theorem1) {
        const VerifySection& section = *config.theorem1;
        double previous_median = -1.0;
        bool trend_ok = true;
        for (std::size_t i = 0; i < section.population_sizes.size(); ++i) {
            const std::size_t n = section.population_sizes[i];
            ScenarioConfig scenario = scenario_from_section(section, n, derive_seed(config.seed, {0x40, i}),
                                                            config.sigma_band, jobs, 0x40 + i);
            std::vector<double> trace;
            const Theorem1Report r = verify_theorem1_interval(scenario, traces.directory.empty() ? nullptr : &trace);
            traces.write("theorem1_n" + std::to_string(n), trace);
            if (previous_median >= 0.0)
                trend_ok = trend_ok && r.median_abs_ratio_error < previous_median;
            previous_median = r.median_abs_ratio_error;
            json block{{"check", "theorem1"},
                       {"population_size", n},
                       {"interval_lower", r.interval_lower},
                       {"coverage", r.coverage},
                       {"required_coverage", r.required_coverage},
                       {"median_abs_ratio_error", r.median_abs_ratio_error},
                       {"replicates_used", r.replicates_used},
                       {"degenerate_runs", r.degenerate_runs}};
            if (r.interval_upper)
                block["interval_upper"] = *r.interval_upper;
            else
                block["interval_upper"] = nullptr;
            note(block, r.pass);
        }
        if (section.population_sizes.size() > 1)
            note(json{{"check", "theorem1_median_trend"},
                      {"population_sizes", section.population_sizes}},
                 trend_ok);
    }

    if (config.indifference) {
        const VerifySection& section = *config.indifference;
        ScenarioConfig arm_a = scenario_from_section(section, section.population_size,
                                                     derive_seed(config.seed, {0x50}), config.sigma_band, jobs, 0x50);
        ScenarioConfig arm_b = arm_a;
        arm_a.first_stage = section.first_stage;
        arm_b.first_stage = section.first_stage_b;
        const IndifferenceReport r = verify_first_stage_indifference(arm_a, arm_b, section.tolerance);
        note(json{{"check", "first_stage_indifference"},
                  {"first_stage_a", to_string(arm_a.first_stage)},
                  {"first_stage_b", to_string(arm_b.first_stage)},
                  {"adjusted_mean_a", r.adjusted_mean_a},
                  {"adjusted_mean_b", r.adjusted_mean_b},
                  {"naive_mean_a", r.naive_mean_a},
                  {"naive_mean_b", r.naive_mean_b},
                  {"adjusted_rel_diff", r.adjusted_rel_diff},
                  {"naive_rel_diff", r.naive_rel_diff},
                  {"tolerance", r.tolerance},
                  {"degenerate_a", r.degenerate_a},
                  {"degenerate_b", r.degenerate_b}},
             r.pass);
    }

    outcome.report["checks"] = checks;
    outcome.report["all_pass"] = outcome.all_pass;
    return outcome;
}

} // namespace recap
