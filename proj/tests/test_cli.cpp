#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "test_util.hpp"
#include "xenopower/power.hpp"

using namespace xenopower;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "xenopower_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

bool contains(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

} // namespace

TEST_CASE("integer list syntax") {
    CHECK(cli::parse_int_list("3:10") == std::vector<int>{3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(cli::parse_int_list("3,5,8") == std::vector<int>{3, 5, 8});
    CHECK(cli::parse_int_list("8,3") == std::vector<int>{3, 8});
    CHECK(cli::parse_int_list("4") == std::vector<int>{4});
    CHECK_THROWS_AS(cli::parse_int_list("5:3"), ValidationError);
    CHECK_THROWS_AS(cli::parse_int_list("3,3"), ValidationError);
    CHECK_THROWS_AS(cli::parse_int_list("a:b"), ValidationError);
    CHECK_THROWS_AS(cli::parse_int_list("3.5"), ValidationError);
    CHECK_THROWS_AS(cli::parse_int_list(""), ValidationError);
}

TEST_CASE("pow-frailty header echoes the median-elicited parameters") {
    const auto r = run({"pow-frailty", "--ctl-med", "2.4", "--tx-med", "7.2", "--nu", "1", "--tau2", "0.1",
                        "--censor-time", "12", "--n", "3", "--m", "2", "--sim", "20"});
    REQUIRE(r.code == cli::kOk);
    CHECK(contains(r.out, "Scale parameter (lambda): 0.2888113\n"));
    CHECK(contains(r.out, "Treatment effect (beta): -1.098612\n"));
    CHECK(contains(r.out, "Censoring Rate(%)"));
    CHECK(contains(r.out, "Censoring time (Ct): 12\n"));
}

TEST_CASE("pow-anova defaults match the documented values") {
    const auto r = run({"pow-anova", "--ctl-med", "2.4", "--tx-med", "7.2", "--n", "3", "--m", "2", "--sim", "20"});
    REQUIRE(r.code == cli::kOk);
    CHECK(contains(r.out, "Variance of random effect (tau2): 0.1111111\n"));
    CHECK(contains(r.out, "Intra-PDX correlation coefficient (icc): 0.1\n"));
    CHECK(contains(r.out, "Random error variance (sigma2): 1\n"));
    CHECK(contains(r.out, "Significance level (alpha): 0.05\n"));
    CHECK_FALSE(contains(r.out, "Censoring"));
}

TEST_CASE("defaults snapshot") {
    const auto anova = run({"pow-anova", "--help"});
    CHECK(anova.code == cli::kOk);
    CHECK(contains(anova.out, "--icc FLOAT [0.1]"));
    CHECK(contains(anova.out, "--sigma2 FLOAT [1]"));
    CHECK(contains(anova.out, "--sim INT [500]"));
    CHECK(contains(anova.out, "--alpha FLOAT [0.05]"));
    CHECK(contains(anova.out, "--n TEXT [3:10]"));
    CHECK(contains(anova.out, "--m TEXT [2:8]"));
    CHECK(contains(anova.out, "--target-power FLOAT [0.8]"));
    const auto frailty = run({"pow-frailty", "--help"});
    CHECK(contains(frailty.out, "--nu FLOAT [1]"));
    CHECK(contains(frailty.out, "--tau2 FLOAT [0.1]"));
    CHECK(contains(frailty.out, "--quad-points INT [15]"));
}

TEST_CASE("exit codes") {
    CHECK(run({}).code == cli::kUsageError);
    CHECK(run({"pow-anova"}).code == cli::kUsageError);
    CHECK(run({"pow-anova", "--ctl-med", "2.4", "--tx-med", "7.2", "--alpha", "0"}).code == cli::kUsageError);
    CHECK(run({"pow-anova", "--ctl-med", "2.4", "--tx-med", "7.2", "--m", "0:3"}).code == cli::kUsageError);
    CHECK(run({"pow-anova", "--ctl-med", "2.4", "--tx-med", "7.2", "--icc", "1"}).code == cli::kUsageError);
    CHECK(run({"pow-frailty", "--ctl-med", "-2", "--tx-med", "7.2"}).code == cli::kUsageError);

    const auto missing = run({"pow-anova-data", "--data", "missing.csv", "--sim", "5"});
    CHECK(missing.code == cli::kDataError);
    CHECK(contains(missing.err, "missing.csv"));
    // censored pilot for the uncensored model
    CHECK(run({"pow-anova-data", "--data", testutil::data_path("animals2.csv"), "--sim", "5"}).code ==
          cli::kDataError);

    const auto engine = run({"pow-frailty", "--ctl-med", "2.4", "--tx-med", "7.2", "--censor-time", "0.000001",
                             "--n", "3", "--m", "2", "--sim", "10"});
    CHECK(engine.code == cli::kEngineError);
    CHECK(contains(engine.err, "converged"));
}

TEST_CASE("pilot-data subcommands") {
    const auto anova = run({"pow-anova-data", "--data", testutil::data_path("animals1.csv"), "--n", "3", "--m",
                            "2,3", "--sim", "50"});
    REQUIRE(anova.code == cli::kOk);
    CHECK(contains(anova.out, "Parameter estimates based on the pilot data"));
    CHECK(contains(anova.out, "Treatment effect (beta): 0.729"));

    const auto frailty = run({"pow-frailty-data", "--data", testutil::data_path("animals2.csv"), "--censor-time",
                              "30", "--n", "3", "--m", "2", "--sim", "20"});
    REQUIRE(frailty.code == cli::kOk);
    CHECK(contains(frailty.out, "Shape parameter (nu): "));
    CHECK(contains(frailty.out, "Censoring Rate(%)"));
}

TEST_CASE("output files and the plot subcommand") {
    const auto csv = scratch("t.csv"), json = scratch("t.json"), svg = scratch("t.svg"), svg2 = scratch("t2.svg");
    const auto r = run({"pow-anova", "--ctl-med", "2.4", "--tx-med", "7.2", "--n", "3:4", "--m", "2:3", "--sim",
                        "40", "--threads", "2", "--out-csv", csv.string(), "--out-json", json.string(), "--plot",
                        svg.string(), "--progress"});
    REQUIRE(r.code == cli::kOk);
    CHECK(slurp(csv).rfind("n,m,N,power_pct,convergence_pct\n", 0) == 0);
    CHECK(contains(slurp(json), "\"frontier\""));
    CHECK(contains(slurp(svg), "<svg"));
    CHECK(contains(r.err, "progress: 4/4 cells"));

    REQUIRE(run({"plot", "--table", csv.string(), "--out", svg2.string()}).code == cli::kOk);
    CHECK(slurp(svg2) == slurp(svg));
    REQUIRE(run({"plot", "--table", json.string(), "--out", svg2.string()}).code == cli::kOk);
    CHECK(slurp(svg2) == slurp(svg));
    CHECK(run({"plot", "--table", scratch("nope.csv").string(), "--out", svg2.string()}).code == cli::kDataError);
}

TEST_CASE("echoed parameters reproduce the table bit-exactly") {
    const auto json = scratch("frailty.json");
    const auto r = run({"pow-frailty", "--ctl-med", "2.4", "--tx-med", "7.2", "--censor-time", "12", "--n", "3,5",
                        "--m", "2", "--sim", "30", "--seed", "987654321", "--out-json", json.string()});
    REQUIRE(r.code == cli::kOk);
    const PowerReport report = parse_power_json(slurp(json));
    PowerJob job;
    job.grid = report.table.grid;
    job.model = report.table.model;
    job.target_power = report.target_power;
    const PowerTable again = run_power_grid(job);
    REQUIRE(again.rows.size() == report.table.rows.size());
    for (std::size_t k = 0; k < again.rows.size(); ++k) {
        CHECK(again.rows[k].power == report.table.rows[k].power);
        CHECK(again.rows[k].convergence_rate == report.table.rows[k].convergence_rate);
        CHECK(again.rows[k].avg_censoring_rate == report.table.rows[k].avg_censoring_rate);
    }
    CHECK(report.table.grid.seed == 987654321u);
}

TEST_CASE("the same invocation is byte-identical across thread counts") {
    std::string first;
    for (const char* threads : {"1", "2", "8"}) {
        const auto csv = scratch(std::string("det") + threads + ".csv");
        const auto r = run({"pow-anova", "--ctl-med", "2.4", "--tx-med", "7.2", "--n", "3:5", "--m", "2:4", "--sim",
                            "60", "--threads", threads, "--out-csv", csv.string()});
        REQUIRE(r.code == cli::kOk);
        if (first.empty()) first = slurp(csv);
        else CHECK(slurp(csv) == first);
    }
}
