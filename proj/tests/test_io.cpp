#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "recap/driver.hpp"
#include "recap/io.hpp"

using namespace recap;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("recap_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool message_contains(const std::exception& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("degree CSV round trip") {
    TempDir dir;
    const std::vector<int> degrees = {3, 5, 12, 1, 999};
    write_degree_csv(dir.file("deg.csv"), degrees);
    CHECK(read_degree_csv(dir.file("deg.csv")) == degrees);
}

TEST_CASE("degree CSV validation errors carry line numbers") {
    TempDir dir;
    write_text(dir.file("bad.csv"), "degree\n3\nx\n");
    try {
        read_degree_csv(dir.file("bad.csv"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(message_contains(e, ":3:"));
    }
    write_text(dir.file("badheader.csv"), "deg\n3\n");
    try {
        read_degree_csv(dir.file("badheader.csv"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(message_contains(e, ":1:"));
    }
}

TEST_CASE("population CSV round trip") {
    TempDir dir;
    Population pop;
    pop.degrees = {4, 7, 7, 2};
    pop.strata = {"a", "b", "a", "b"};
    write_population_csv(dir.file("pop.csv"), pop);
    const Population back = read_population_csv(dir.file("pop.csv"));
    CHECK(back.degrees == pop.degrees);
    CHECK(back.strata == pop.strata);
}

TEST_CASE("edge CSV round trip preserves the graph") {
    TempDir dir;
    const Network net = build_configuration_network({3, 2, 2, 3, 2}, 17);
    write_edge_csv(dir.file("edges.csv"), net);
    const Network back = read_edge_csv(dir.file("edges.csv"));
    REQUIRE(back.node_count() == net.node_count());
    for (std::size_t i = 0; i < net.node_count(); ++i)
        CHECK(back.adjacency[i] == net.adjacency[i]);
}

TEST_CASE("study table round trip is exact") {
    TempDir dir;
    const SampleMembership capture = sample_uniform(40, 13, 3, Stage::Capture);
    const SampleMembership recapture = sample_uniform(40, 9, 4, Stage::Recapture);
    std::vector<double> weights(40);
    Rng rng(5);
    for (double& w : weights)
        w = 0.1 + 10.0 * rng.unit();
    const StudyTable table = make_study_table(capture, recapture, weights);
    write_membership_csv(dir.file("study.csv"), table);
    const StudyTable back = read_membership_csv(dir.file("study.csv"));
    CHECK(back == table); // bit-exact weights via shortest round-trip formatting
}

TEST_CASE("forest CSV round trip, seeds carry an empty recruiter") {
    TempDir dir;
    RecruitmentForest forest;
    forest.nodes = {{7, -1, 0, 0}, {3, 7, 1, 0}, {9, -1, 0, 1}};
    write_forest_csv(dir.file("forest.csv"), forest);
    const std::string text = read_text(dir.file("forest.csv"));
    CHECK(text.find("7,,0,0") != std::string::npos);
    const RecruitmentForest back = read_forest_csv(dir.file("forest.csv"));
    REQUIRE(back.nodes.size() == 3);
    CHECK(back.nodes[0].recruiter == -1);
    CHECK(back.nodes[1].recruiter == 7);
    CHECK(back.nodes[2].tree == 1);
}

TEST_CASE("recapture member CSV round trip and validation") {
    TempDir dir;
    const std::vector<Member> members = {{1.5, true}, {2.25, false}, {0.125, true}};
    write_recapture_members_csv(dir.file("rec.csv"), members);
    const std::vector<Member> back = read_recapture_members_csv(dir.file("rec.csv"));
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].weight == members[i].weight);
        CHECK(back[i].in_first == members[i].in_first);
    }

    write_text(dir.file("zero.csv"), "weight,in_first\n2.0,1\n0,0\n");
    try {
        read_recapture_members_csv(dir.file("zero.csv"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(message_contains(e, ":3:"));
        CHECK(message_contains(e, "positive"));
    }
}

TEST_CASE("count table CSV with an attached weights file") {
    TempDir dir;
    write_recapture_members_csv(dir.file("white_members.csv"),
                                {{2.0, true}, {2.0, false}, {2.0, true}, {2.0, false}});
    write_text(dir.file("table.csv"),
               "group,capture_size,recapture_size,recaptured,weights_file\n"
               "White,6716,378,269,\n"
               "Tiny,40,4,2,white_members.csv\n");
    const std::vector<CountTableRow> rows = read_count_table_csv(dir.file("table.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].members.empty());
    CHECK(rows[1].members.size() == 4);

    // four-column variant without the optional weights column
    write_text(dir.file("table4.csv"),
               "group,capture_size,recapture_size,recaptured\nWhite,6716,378,269\n");
    CHECK(read_count_table_csv(dir.file("table4.csv")).size() == 1);
}

TEST_CASE("count table rejects inconsistent rows with a line number") {
    TempDir dir;
    write_text(dir.file("bad.csv"),
               "group,capture_size,recapture_size,recaptured\nA,10,5,6\n");
    try {
        read_count_table_csv(dir.file("bad.csv"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(message_contains(e, ":2:"));
    }
}

TEST_CASE("atomic writes leave no temporary behind and replace content") {
    TempDir dir;
    const std::string target = dir.file("out.txt");
    atomic_write_file(target, "first\n");
    atomic_write_file(target, "second\n");
    CHECK(read_text(target) == "second\n");
    CHECK_FALSE(std::filesystem::exists(target + ".tmp"));
}

TEST_CASE("sweep CSV carries the pinned column layout") {
    SweepSummary summary;
    SweepRow row;
    row.exponent = 2.5;
    row.naive_mean = 100.5;
    row.naive_std = 3.25;
    row.adjusted_mean = 240.0;
    row.adjusted_std = 8.0;
    row.degenerate_runs = 2;
    summary.rows.push_back(row);
    const std::string csv = sweep_csv(summary);
    CHECK(csv == "lambda,estimator,mean,std,degenerate_runs\n"
                 "2.5,naive,100.5,3.25,2\n"
                 "2.5,adjusted,240,8,2\n");
}

TEST_CASE("count results CSV leaves missing estimates empty") {
    std::vector<CountTableResult> results(2);
    results[0].group = "a";
    results[0].naive = 12.5;
    results[1].group = "b";
    results[1].degenerate = true;
    CHECK(count_results_csv(results) == "group,naive,adjusted\na,12.5,\nb,,\n");
}

TEST_CASE("config parsing rejects unknown keys") {
    const json bad = json::parse(R"({"seed": 1, "lambda_gird": [2.0]})");
    CHECK_THROWS_AS(parse_sweep_config(bad), ConfigError);
    try {
        parse_sweep_config(bad);
    } catch (const ConfigError& e) {
        CHECK(message_contains(e, "lambda_gird"));
    }

    const json bad_verify = json::parse(R"({"seed": 1, "concentraton": {}})");
    CHECK_THROWS_AS(parse_verify_config(bad_verify), ConfigError);
}

TEST_CASE("sweep config defaults match the documented values") {
    const SweepConfig config = parse_sweep_config(json::parse(R"({"seed": 7})"));
    CHECK(config.population_size == 2500);
    CHECK(config.capture_size == 100);
    CHECK(config.recapture_size == 100);
    CHECK(config.networks_per_exponent == 20);
    CHECK(config.runs_per_network == 50);
    CHECK(config.max_recruits == 3);
    CHECK(config.min_degree == 3);
    CHECK(config.resolved_max_degree() == 2499);
    CHECK(config.exponent_grid == default_exponent_grid());
}

TEST_CASE("weight specs") {
    const WeightSpec constant = parse_weight_spec(json::parse(R"({"kind":"constant"})"), "w");
    CHECK(make_weights(constant, 5, 1) == std::vector<double>(5, 1.0));

    const WeightSpec two = parse_weight_spec(json::parse(R"({"kind":"two_point","low":1,"high":4,"high_fraction":0.4})"), "w");
    const std::vector<double> w = make_weights(two, 5, 1);
    CHECK(std::count(w.begin(), w.end(), 4.0) == 2);

    CHECK_THROWS_AS(parse_weight_spec(json::parse(R"({"kind":"nope"})"), "w"), ConfigError);
    CHECK_THROWS_AS(parse_weight_spec(json::parse(R"({"kind":"constant","low":2})"), "w"), ConfigError);

    const WeightSpec pl = parse_weight_spec(json::parse(R"({"kind":"power_law","exponent":2.5,"max_degree":30})"), "w");
    const std::vector<double> pw = make_weights(pl, 1000, 9);
    CHECK(pw.size() == 1000);
    CHECK(*std::min_element(pw.begin(), pw.end()) >= 3.0);
    CHECK(*std::max_element(pw.begin(), pw.end()) <= 30.0);
}

TEST_CASE("verify battery runs a small config end to end") {
    const json config_json = json::parse(R"({
        "seed": 11,
        "concentration": {
            "population_size": 2000, "alpha1": 0.1, "alpha2": 0.1, "replicates": 300,
            "weights": {"kind": "two_point", "low": 3, "high": 15, "high_fraction": 0.2},
            "first_stage": "uniform"
        },
        "theorem1": {
            "population_sizes": [1000, 4000], "alpha1": 0.2, "alpha2": 0.2, "replicates": 300,
            "weights": {"kind": "two_point", "low": 1, "high": 3, "high_fraction": 0.3},
            "first_stage": "uniform"
        }
    })");
    const VerifyConfig config = parse_verify_config(config_json);
    const VerifyOutcome outcome = run_verify_battery(config, 2);
    CHECK(outcome.all_pass);
    // marginal + joint concentration, two theorem-1 sizes, one trend check
    CHECK(outcome.report.at("checks").size() == 5);
}

TEST_CASE("verify battery honours a zero sigma band by failing") {
    const json config_json = json::parse(R"({
        "seed": 11,
        "sigma_band": 0.0,
        "concentration": {
            "population_size": 2000, "alpha1": 0.1, "alpha2": 0.1, "replicates": 200,
            "weights": {"kind": "two_point", "low": 3, "high": 15, "high_fraction": 0.2}
        }
    })");
    const VerifyOutcome outcome = run_verify_battery(parse_verify_config(config_json), 1);
    CHECK_FALSE(outcome.all_pass);
}

} // TEST_SUITE
