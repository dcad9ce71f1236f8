#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#ifndef RECAP_CLI_PATH
#error "RECAP_CLI_PATH must point at the built binary"
#endif

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("recap_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

RunResult run_cli(const TempDir& dir, const std::string& args) {
    const std::string out_path = dir.file("stdout.txt");
    const std::string err_path = dir.file("stderr.txt");
    const std::string cmd =
        std::string(RECAP_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_text(out_path);
    result.err = read_text(err_path);
    return result;
}

const std::string table_csv = "group,capture_size,recapture_size,recaptured\n"
                              "White,6716,378,269\n"
                              "Asian,2191,378,58\n"
                              "Hispanic,748,378,8\n"
                              "Black,712,378,14\n"
                              "nonUS,1073,378,14\n";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("count-table reproduces the published naive estimates") {
    TempDir dir;
    write_text(dir.file("table.csv"), table_csv);
    const RunResult r = run_cli(dir, "count-table --table " + dir.file("table.csv") + " --out " + dir.file("out.csv"));
    REQUIRE(r.exit_code == 0);
    for (const std::string rounded : {"9437", "14279", "35343", "19224", "28971"})
        CHECK(r.out.find("rounded=" + rounded) != std::string::npos);
    const std::string csv = read_text(dir.file("out.csv"));
    CHECK(csv.rfind("group,naive,adjusted\n", 0) == 0);
    CHECK(csv.find("Hispanic,35343,") != std::string::npos);
}

TEST_CASE("count-table flags degenerate rows without failing") {
    TempDir dir;
    write_text(dir.file("table.csv"),
               "group,capture_size,recapture_size,recaptured\nA,10,5,2\nB,10,5,0\n");
    const RunResult r = run_cli(dir, "count-table --table " + dir.file("table.csv"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("degenerate") != std::string::npos);
}

TEST_CASE("estimate from a bare capture count and a recapture file") {
    TempDir dir;
    write_text(dir.file("rec.csv"), "weight,in_first\n1,1\n2,0\n");
    const RunResult r = run_cli(dir, "estimate --capture-size 2 --recapture " + dir.file("rec.csv") +
                                         " --json-out " + dir.file("report.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("adjusted") != std::string::npos);
    CHECK(r.out.find("estimate=3") != std::string::npos);

    const nlohmann::json report = nlohmann::json::parse(read_text(dir.file("report.json")));
    CHECK(report.at("adjusted").at("estimate").get<double>() == doctest::Approx(3.0));
    CHECK(report.at("naive").at("estimate").get<double>() == doctest::Approx(4.0));
}

TEST_CASE("estimate with constant weights reports adjusted equal to naive") {
    TempDir dir;
    write_text(dir.file("rec.csv"), "weight,in_first\n5,1\n5,0\n5,1\n5,0\n");
    const RunResult r = run_cli(dir, "estimate --capture-size 10 --recapture " + dir.file("rec.csv") +
                                         " --json-out " + dir.file("report.json"));
    REQUIRE(r.exit_code == 0);
    const nlohmann::json report = nlohmann::json::parse(read_text(dir.file("report.json")));
    CHECK(report.at("adjusted").at("estimate").get<double>() ==
          doctest::Approx(report.at("naive").at("estimate").get<double>()).epsilon(1e-12));
}

TEST_CASE("estimate exits 2 when nobody was recaptured") {
    TempDir dir;
    write_text(dir.file("rec.csv"), "weight,in_first\n1,0\n2,0\n");
    const RunResult r = run_cli(dir, "estimate --capture-size 5 --recapture " + dir.file("rec.csv"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("zero recapture") != std::string::npos);
}

TEST_CASE("estimate exits 1 on a zero weight and cites the line") {
    TempDir dir;
    write_text(dir.file("rec.csv"), "weight,in_first\n1,1\n0,0\n");
    const RunResult r = run_cli(dir, "estimate --capture-size 5 --recapture " + dir.file("rec.csv"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find(":3:") != std::string::npos);
}

TEST_CASE("generate-network, sample and estimate compose") {
    TempDir dir;
    RunResult r = run_cli(dir, "generate-network --n 400 --exponent 2.5 --max-degree 40 --seed 5"
                               " --degrees-out " + dir.file("deg.csv") + " --edges-out " + dir.file("edges.csv"));
    REQUIRE(r.exit_code == 0);
    r = run_cli(dir, "sample --degrees " + dir.file("deg.csv") + " --edges " + dir.file("edges.csv") +
                         " --capture degree:80 --recapture rds:80 --seed 9 --out " + dir.file("study.csv") +
                         " --forest-out " + dir.file("forest.csv"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("S1=80") != std::string::npos);
    r = run_cli(dir, "estimate --members " + dir.file("study.csv"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("naive") != std::string::npos);

    const std::string forest = read_text(dir.file("forest.csv"));
    CHECK(forest.rfind("recruit_id,recruiter_id,wave,tree_id\n", 0) == 0);
}

TEST_CASE("generate-network builds stratified populations") {
    TempDir dir;
    const RunResult r = run_cli(dir, "generate-network --n 100 --normal-mean 12.1 --normal-sd 5 --seed 3"
                                     " --population-out " + dir.file("pop.csv") + " --strata a:40,b:60");
    REQUIRE(r.exit_code == 0);
    const std::string pop = read_text(dir.file("pop.csv"));
    CHECK(pop.rfind("id,degree,stratum\n", 0) == 0);
    RunResult s = run_cli(dir, "sample --population " + dir.file("pop.csv") +
                                   " --capture stratum:a --recapture uniform:30 --seed 4 --out " +
                                   dir.file("study.csv"));
    CHECK(s.exit_code == 0);
    CHECK(s.out.find("S1=40") != std::string::npos);
}

TEST_CASE("sweep outputs are byte-identical across reruns and worker counts") {
    TempDir dir;
    write_text(dir.file("sweep.json"), R"({
        "seed": 77,
        "lambda_grid": [2.5, 4.0],
        "population_size": 400,
        "capture_size": 40,
        "recapture_size": 40,
        "networks_per_lambda": 2,
        "runs_per_network": 4
    })");
    const std::string base = "sweep --config " + dir.file("sweep.json");
    RunResult a = run_cli(dir, base + " -j 1 --out-csv " + dir.file("a.csv") + " --out-json " + dir.file("a.json"));
    REQUIRE(a.exit_code == 0);
    RunResult b = run_cli(dir, base + " -j 1 --out-csv " + dir.file("b.csv") + " --out-json " + dir.file("b.json"));
    RunResult c = run_cli(dir, base + " -j 4 --out-csv " + dir.file("c.csv") + " --out-json " + dir.file("c.json"));
    CHECK(read_text(dir.file("a.csv")) == read_text(dir.file("b.csv")));
    CHECK(read_text(dir.file("a.csv")) == read_text(dir.file("c.csv")));
    CHECK(read_text(dir.file("a.json")) == read_text(dir.file("b.json")));
    CHECK(read_text(dir.file("a.json")) == read_text(dir.file("c.json")));

    const std::string csv = read_text(dir.file("a.csv"));
    CHECK(csv.rfind("lambda,estimator,mean,std,degenerate_runs\n", 0) == 0);
    // 2 lambdas x 2 estimator rows + header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

    // seed override changes the outputs
    RunResult d = run_cli(dir, base + " --seed 78 --out-csv " + dir.file("d.csv"));
    CHECK(read_text(dir.file("a.csv")) != read_text(dir.file("d.csv")));
}

TEST_CASE("sweep rejects malformed configs with exit 1") {
    TempDir dir;
    write_text(dir.file("bad.json"), R"({"seed": 1, "lambda_gird": [2.0]})");
    const RunResult r = run_cli(dir, "sweep --config " + dir.file("bad.json"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("lambda_gird") != std::string::npos);

    write_text(dir.file("notjson.json"), "{");
    CHECK(run_cli(dir, "sweep --config " + dir.file("notjson.json")).exit_code == 1);
}

TEST_CASE("verify passes on a sane config and exits 3 when a check fails") {
    TempDir dir;
    write_text(dir.file("verify.json"), R"({
        "seed": 5,
        "concentration": {
            "population_size": 2000, "alpha1": 0.1, "alpha2": 0.1, "replicates": 200,
            "weights": {"kind": "two_point", "low": 3, "high": 15, "high_fraction": 0.2}
        }
    })");
    const RunResult ok = run_cli(dir, "verify --config " + dir.file("verify.json") + " --out " +
                                          dir.file("report.json") + " --trace-dir " + dir.file("traces"));
    REQUIRE(ok.exit_code == 0);
    const nlohmann::json report = nlohmann::json::parse(read_text(dir.file("report.json")));
    CHECK(report.at("all_pass").get<bool>());
    CHECK(report.at("manifest").at("seed").get<int>() == 5);
    CHECK(std::filesystem::exists(dir.file("traces") + "/concentration_marginal.csv"));

    write_text(dir.file("broken.json"), R"({
        "seed": 5,
        "sigma_band": 0.0,
        "concentration": {
            "population_size": 2000, "alpha1": 0.1, "alpha2": 0.1, "replicates": 200,
            "weights": {"kind": "two_point", "low": 3, "high": 15, "high_fraction": 0.2}
        }
    })");
    const RunResult fail = run_cli(dir, "verify --config " + dir.file("broken.json"));
    CHECK(fail.exit_code == 3);
}

TEST_CASE("verify outputs are byte-identical across worker counts") {
    TempDir dir;
    write_text(dir.file("verify.json"), R"({
        "seed": 6,
        "theorem1": {
            "population_sizes": [1000, 2000], "alpha1": 0.2, "alpha2": 0.2, "replicates": 200,
            "weights": {"kind": "two_point", "low": 1, "high": 3, "high_fraction": 0.3}
        }
    })");
    const std::string base = "verify --config " + dir.file("verify.json");
    REQUIRE(run_cli(dir, base + " -j 1 --out " + dir.file("a.json")).exit_code == 0);
    REQUIRE(run_cli(dir, base + " -j 3 --out " + dir.file("b.json")).exit_code == 0);
    CHECK(read_text(dir.file("a.json")) == read_text(dir.file("b.json")));
}

} // TEST_SUITE
