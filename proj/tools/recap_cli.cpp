// recap: capture-recapture estimation and simulation toolkit.
//
// Subcommands: generate-network, sample, estimate, sweep, verify, count-table.
// Exit codes: 0 success, 1 malformed input or config, 2 degenerate study
// (nobody captured twice), 3 verify check failure.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recap/driver.hpp"
#include "recap/io.hpp"
#include "recap/version.hpp"

namespace {

unsigned default_jobs() {
    if (const char* env = std::getenv("RECAP_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1)
            return static_cast<unsigned>(v);
    }
    return 1;
}

std::string six_digits(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

struct SchemeArg {
    std::string kind;
    std::string arg;
};

SchemeArg parse_scheme(const std::string& text, const std::string& flag) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos || colon + 1 == text.size())
        throw recap::ConfigError(flag + ": expected '<kind>:<arg>', got '" + text + "'");
    return SchemeArg{text.substr(0, colon), text.substr(colon + 1)};
}

std::size_t parse_size(const std::string& text, const std::string& flag) {
    try {
        return static_cast<std::size_t>(std::stoull(text));
    } catch (const std::exception&) {
        throw recap::ConfigError(flag + ": '" + text + "' is not a count");
    }
}

std::vector<recap::StratumSpec> parse_strata_arg(const std::string& text) {
    // label:size,label:size,...
    std::vector<recap::StratumSpec> groups;
    std::string current;
    std::vector<std::string> parts;
    for (char c : text) {
        if (c == ',') {
            parts.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    parts.push_back(current);
    for (const std::string& part : parts) {
        const std::size_t colon = part.find(':');
        if (colon == std::string::npos)
            throw recap::ConfigError("--strata: expected 'label:size', got '" + part + "'");
        groups.push_back(recap::StratumSpec{part.substr(0, colon), parse_size(part.substr(colon + 1), "--strata")});
    }
    return groups;
}

void print_report(const recap::EstimateReport& report) {
    const recap::CrossCounts& c = report.counts;
    std::printf("%-9s estimate=%s rounded=%lld (S1=%lld S2=%lld a11=%lld a10=%lld a01=%lld",
                recap::to_string(report.kind), six_digits(report.estimate).c_str(),
                recap::round_half_up(report.estimate), static_cast<long long>(c.first_size()),
                static_cast<long long>(c.second_size()), static_cast<long long>(c.in_both),
                static_cast<long long>(c.first_only), static_cast<long long>(c.second_only));
    if (report.weight_sums)
        std::printf(" W11=%s W01=%s", six_digits(report.weight_sums->in_both).c_str(),
                    six_digits(report.weight_sums->second_only).c_str());
    std::printf(")\n");
}

recap::json report_json(const recap::EstimateReport& report) {
    recap::json j;
    j["estimator"] = recap::to_string(report.kind);
    j["estimate"] = report.estimate;
    j["rounded"] = recap::round_half_up(report.estimate);
    j["counts"] = {{"in_both", report.counts.in_both},
                   {"first_only", report.counts.first_only},
                   {"second_only", report.counts.second_only}};
    if (report.weight_sums)
        j["weight_sums"] = {{"in_both", report.weight_sums->in_both},
                            {"second_only", report.weight_sums->second_only}};
    return j;
}

// --- generate-network --------------------------------------------------------

struct GenerateArgs {
    std::size_t n = 0;
    double exponent = 0.0;
    int min_degree = 3;
    std::optional<int> max_degree;
    double normal_mean = 0.0;
    double normal_sd = 0.0;
    std::uint64_t seed = 0;
    std::string degrees_in;
    std::string degrees_out;
    std::string edges_out;
    std::string population_out;
    std::string strata;
    double strata_corr = 0.0;
};

int run_generate(const GenerateArgs& args) {
    std::vector<int> degrees;
    if (!args.degrees_in.empty()) {
        degrees = recap::read_degree_csv(args.degrees_in);
    } else if (args.normal_mean > 0.0) {
        degrees = recap::discretized_normal_degrees(args.n, args.normal_mean, args.normal_sd, args.min_degree,
                                                    recap::derive_seed(args.seed, {recap::stream::degrees}));
    } else {
        recap::PowerLawSpec spec{args.exponent, args.min_degree,
                                 args.max_degree ? *args.max_degree : static_cast<int>(args.n) - 1};
        degrees = recap::sample_power_law_degrees(args.n, spec,
                                                  recap::derive_seed(args.seed, {recap::stream::degrees}));
    }

    std::optional<recap::Network> net;
    if (!args.edges_out.empty() || !args.population_out.empty()) {
        net = recap::build_configuration_network(degrees, recap::derive_seed(args.seed, {recap::stream::network}));
    }

    if (!args.degrees_out.empty())
        recap::write_degree_csv(args.degrees_out, net ? net->degrees() : degrees);
    if (!args.edges_out.empty())
        recap::write_edge_csv(args.edges_out, *net);
    if (!args.population_out.empty()) {
        if (args.strata.empty())
            throw recap::ConfigError("--population-out requires --strata");
        recap::Population pop = recap::population_from_network(*net);
        recap::assign_strata(pop, parse_strata_arg(args.strata),
                             recap::derive_seed(args.seed, {recap::stream::strata}), args.strata_corr);
        recap::write_population_csv(args.population_out, pop);
    }
    return 0;
}

// --- sample -------------------------------------------------------------------

struct SampleArgs {
    std::string degrees_file;
    std::string edges_file;
    std::string population_file;
    std::string capture;
    std::string recapture;
    std::size_t bootstrap = 0;
    int max_recruits = 3;
    std::string rds_seed_rule = "uniform";
    std::uint64_t seed = 0;
    std::string out;
    std::string forest_out;
};

int run_sample(const SampleArgs& args) {
    recap::Population pop;
    std::optional<recap::Network> net;
    if (!args.edges_file.empty()) {
        net = recap::read_edge_csv(args.edges_file);
        pop = recap::population_from_network(*net);
    }
    if (!args.population_file.empty()) {
        pop = recap::read_population_csv(args.population_file);
    } else if (!args.degrees_file.empty()) {
        pop.degrees = recap::read_degree_csv(args.degrees_file);
    }
    if (pop.size() == 0)
        throw recap::ConfigError("provide --degrees, --population or --edges");
    if (net && net->node_count() != pop.size())
        throw recap::SizeMismatch("network and population sizes differ");

    recap::RdsOptions rds_options;
    rds_options.max_recruits = args.max_recruits;
    rds_options.seed_rule = args.rds_seed_rule == "degree" ? recap::RdsSeedRule::DegreeProportional
                                                           : recap::RdsSeedRule::Uniform;

    std::optional<recap::RecruitmentForest> forest;
    auto run_stage = [&](const std::string& text, const std::string& flag, recap::Stage stage,
                         std::uint64_t stage_stream) -> recap::SampleMembership {
        const SchemeArg scheme = parse_scheme(text, flag);
        const std::uint64_t stage_seed = recap::derive_seed(args.seed, {stage_stream});
        if (scheme.kind == "uniform")
            return recap::sample_uniform(pop, parse_size(scheme.arg, flag), stage_seed, stage);
        if (scheme.kind == "degree")
            return recap::sample_degree_biased(pop, parse_size(scheme.arg, flag), stage_seed, stage);
        if (scheme.kind == "stratum")
            return recap::stratum_capture(pop, scheme.arg);
        if (scheme.kind == "rds") {
            if (!net)
                throw recap::ConfigError(flag + ": rds sampling needs --edges");
            recap::RdsResult result =
                recap::simulate_rds(*net, parse_size(scheme.arg, flag), rds_options, stage_seed);
            result.membership.stage = stage;
            forest = std::move(result.forest);
            return std::move(result.membership);
        }
        throw recap::ConfigError(flag + ": unknown scheme '" + scheme.kind + "'");
    };

    const recap::SampleMembership capture = run_stage(args.capture, "--capture", recap::Stage::Capture,
                                                      recap::stream::capture);
    recap::SampleMembership recapture = run_stage(args.recapture, "--recapture", recap::Stage::Recapture,
                                                  recap::stream::recapture);
    if (args.bootstrap > 0)
        recapture = recap::bootstrap_subsample(recapture, args.bootstrap,
                                               recap::derive_seed(args.seed, {recap::stream::bootstrap}));

    std::vector<double> weights(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i)
        weights[i] = static_cast<double>(pop.degrees[i]);
    recap::write_membership_csv(args.out, recap::make_study_table(capture, recapture, std::move(weights)));
    if (!args.forest_out.empty()) {
        if (!forest)
            throw recap::ConfigError("--forest-out requires an rds stage");
        recap::write_forest_csv(args.forest_out, *forest);
    }

    const recap::CrossCounts counts = recap::cross_tabulate(capture, recapture);
    std::printf("S1=%lld S2=%lld a11=%lld\n", static_cast<long long>(counts.first_size()),
                static_cast<long long>(counts.second_size()), static_cast<long long>(counts.in_both));
    return 0;
}

// --- estimate -------------------------------------------------------------------

struct EstimateArgs {
    std::string members_file;
    std::string recapture_file;
    std::int64_t capture_size = 0;
    std::string json_out;
};

int run_estimate(const EstimateArgs& args) {
    recap::RecaptureObservation obs;
    if (!args.members_file.empty()) {
        const recap::StudyTable table = recap::read_membership_csv(args.members_file);
        std::vector<double> weights;
        for (std::size_t i = 0; i < table.weights.size(); ++i)
            if (table.recapture.flags[i])
                weights.push_back(table.weights[i]);
        obs = recap::make_observation(table.capture, table.recapture, weights);
    } else {
        if (args.recapture_file.empty() || args.capture_size < 1)
            throw recap::ConfigError("provide --members, or --capture-size with --recapture");
        obs.first_sample_size = args.capture_size;
        obs.members = recap::read_recapture_members_csv(args.recapture_file);
    }

    const recap::EstimateReport naive = recap::naive_lp(obs.cross_counts());
    const recap::EstimateReport adjusted = recap::adjusted_ht(obs);
    print_report(naive);
    print_report(adjusted);

    if (!args.json_out.empty()) {
        recap::json out;
        out["manifest"] = recap::manifest_json(recap::json::object(), 0);
        out["naive"] = report_json(naive);
        out["adjusted"] = report_json(adjusted);
        recap::atomic_write_file(args.json_out, out.dump(2) + "\n");
    }
    return 0;
}

// --- sweep ----------------------------------------------------------------------

struct SweepArgs {
    std::string config_file;
    std::string out_csv;
    std::string out_json;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed_override;
};

int run_sweep(const SweepArgs& args) {
    recap::json config_json = recap::load_json_file(args.config_file);
    if (args.seed_override)
        config_json["seed"] = *args.seed_override;
    const recap::SweepConfig config = recap::parse_sweep_config(config_json);
    const recap::SweepSummary summary = recap::run_lambda_sweep(config, args.jobs);
    if (!args.out_csv.empty())
        recap::atomic_write_file(args.out_csv, recap::sweep_csv(summary));
    if (!args.out_json.empty())
        recap::atomic_write_file(args.out_json, recap::sweep_summary_json(summary).dump(2) + "\n");
    for (const recap::SweepRow& row : summary.rows)
        std::printf("lambda=%-5s naive=%s(+-%s) adjusted=%s(+-%s) degenerate=%zu\n",
                    six_digits(row.exponent).c_str(), six_digits(row.naive_mean).c_str(),
                    six_digits(row.naive_std).c_str(), six_digits(row.adjusted_mean).c_str(),
                    six_digits(row.adjusted_std).c_str(), row.degenerate_runs);
    return 0;
}

// --- verify ---------------------------------------------------------------------

struct VerifyArgs {
    std::string config_file;
    std::string out_json;
    std::string trace_dir;
    unsigned jobs = 1;
    std::optional<std::uint64_t> seed_override;
};

int run_verify(const VerifyArgs& args) {
    recap::json config_json = recap::load_json_file(args.config_file);
    if (args.seed_override)
        config_json["seed"] = *args.seed_override;
    const recap::VerifyConfig config = recap::parse_verify_config(config_json);
    recap::TraceSink traces{args.trace_dir};
    recap::VerifyOutcome outcome = recap::run_verify_battery(config, args.jobs, traces);
    outcome.report["manifest"] = recap::manifest_json(config_json, config.seed);
    if (!args.out_json.empty())
        recap::atomic_write_file(args.out_json, outcome.report.dump(2) + "\n");
    for (const recap::json& check : outcome.report.at("checks"))
        std::printf("%-28s %s\n", check.at("check").get<std::string>().c_str(),
                    check.at("pass").get<bool>() ? "pass" : "FAIL");
    if (!outcome.all_pass) {
        std::fprintf(stderr, "verify: at least one check failed\n");
        return 3;
    }
    return 0;
}

// --- count-table ------------------------------------------------------------------

struct CountTableArgs {
    std::string table_file;
    std::string out_csv;
};

int run_count_table(const CountTableArgs& args) {
    const std::vector<recap::CountTableRow> rows = recap::read_count_table_csv(args.table_file);
    const std::vector<recap::CountTableResult> results = recap::run_count_table(rows);
    for (const recap::CountTableResult& r : results) {
        if (r.degenerate) {
            std::printf("%-12s degenerate (nobody recaptured)\n", r.group.c_str());
            continue;
        }
        std::printf("%-12s naive=%s rounded=%lld", r.group.c_str(), six_digits(*r.naive).c_str(),
                    recap::round_half_up(*r.naive));
        if (r.adjusted)
            std::printf(" adjusted=%s rounded=%lld", six_digits(*r.adjusted).c_str(),
                        recap::round_half_up(*r.adjusted));
        std::printf("\n");
    }
    if (!args.out_csv.empty())
        recap::atomic_write_file(args.out_csv, recap::count_results_csv(results));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"capture-recapture estimation under degree-driven catchability"};
    app.set_version_flag("--version", std::string("recap ") + recap::version_string);
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate-network", "generate degree sequences and networks");
    generate->add_option("--n", gen.n, "population size");
    generate->add_option("--exponent", gen.exponent, "power-law exponent");
    generate->add_option("--min-degree", gen.min_degree, "minimum degree")->capture_default_str();
    generate->add_option("--max-degree", [&gen](const std::vector<std::string>& v) {
        gen.max_degree = std::stoi(v.front());
        return true;
    }, "truncation cutoff (default n-1)");
    generate->add_option("--normal-mean", gen.normal_mean, "rounded-normal degrees instead of power law");
    generate->add_option("--normal-sd", gen.normal_sd, "standard deviation for --normal-mean");
    generate->add_option("--degrees-in", gen.degrees_in, "reuse an existing degree CSV");
    generate->add_option("--seed", gen.seed, "master seed")->capture_default_str();
    generate->add_option("--degrees-out", gen.degrees_out, "degree CSV output");
    generate->add_option("--edges-out", gen.edges_out, "edge CSV output");
    generate->add_option("--population-out", gen.population_out, "population CSV output (needs --strata)");
    generate->add_option("--strata", gen.strata, "stratum sizes, e.g. young:47,old:2355");
    generate->add_option("--strata-corr", gen.strata_corr, "degree rank correlation of strata in [0,1]")
        ->capture_default_str();

    SampleArgs smp;
    CLI::App* sample = app.add_subcommand("sample", "run a two-stage sampling study");
    sample->add_option("--degrees", smp.degrees_file, "degree CSV");
    sample->add_option("--edges", smp.edges_file, "edge CSV (required for rds stages)");
    sample->add_option("--population", smp.population_file, "population CSV with strata");
    sample->add_option("--capture", smp.capture, "capture scheme kind:arg")->required();
    sample->add_option("--recapture", smp.recapture, "recapture scheme kind:arg")->required();
    sample->add_option("--bootstrap", smp.bootstrap, "subsample the recapture to this size");
    sample->add_option("--max-recruits", smp.max_recruits, "recruit cap per individual")->capture_default_str();
    sample->add_option("--rds-seed-rule", smp.rds_seed_rule, "uniform or degree")->capture_default_str();
    sample->add_option("--seed", smp.seed, "master seed")->capture_default_str();
    sample->add_option("--out", smp.out, "study table CSV output")->required();
    sample->add_option("--forest-out", smp.forest_out, "recruitment forest CSV output");

    EstimateArgs est;
    CLI::App* estimate = app.add_subcommand("estimate", "naive and adjusted estimates for a study");
    estimate->add_option("--members", est.members_file, "study table CSV (id,in_capture,in_recapture,weight)");
    estimate->add_option("--capture-size", est.capture_size, "bare first-stage count (with --recapture)");
    estimate->add_option("--recapture", est.recapture_file, "recapture member CSV (weight,in_first)");
    estimate->add_option("--json-out", est.json_out, "machine-readable report");

    SweepArgs swp;
    CLI::App* sweep = app.add_subcommand("sweep", "heterogeneity sweep from a config file");
    sweep->add_option("--config", swp.config_file, "sweep config JSON")->required();
    sweep->add_option("--out-csv", swp.out_csv, "summary CSV output");
    sweep->add_option("--out-json", swp.out_json, "summary JSON output");
    sweep->add_option("-j,--jobs", swp.jobs, "worker threads")->default_val(default_jobs());
    sweep->add_option("--seed", [&swp](const std::vector<std::string>& v) {
        swp.seed_override = std::stoull(v.front());
        return true;
    }, "override the config seed");

    VerifyArgs ver;
    CLI::App* verify = app.add_subcommand("verify", "run the theory-check battery");
    verify->add_option("--config", ver.config_file, "verify config JSON")->required();
    verify->add_option("--out", ver.out_json, "report JSON output");
    verify->add_option("--trace-dir", ver.trace_dir, "write per-replicate trace CSVs here");
    verify->add_option("-j,--jobs", ver.jobs, "worker threads")->default_val(default_jobs());
    verify->add_option("--seed", [&ver](const std::vector<std::string>& v) {
        ver.seed_override = std::stoull(v.front());
        return true;
    }, "override the config seed");

    CountTableArgs tab;
    CLI::App* table = app.add_subcommand("count-table", "estimates from published aggregate counts");
    table->add_option("--table", tab.table_file, "count table CSV")->required();
    table->add_option("--out", tab.out_csv, "results CSV output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*generate)
            return run_generate(gen);
        if (*sample)
            return run_sample(smp);
        if (*estimate)
            return run_estimate(est);
        if (*sweep)
            return run_sweep(swp);
        if (*verify)
            return run_verify(ver);
        if (*table)
            return run_count_table(tab);
    } catch (const recap::ZeroRecapture& e) {
        std::fprintf(stderr, "error: zero recapture: %s\n", e.what());
        return 2;
    } catch (const recap::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
