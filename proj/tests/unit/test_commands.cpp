#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "clines/commands.hpp"
#include "clines/error.hpp"
#include "clines/io.hpp"
#include "support/fixtures.hpp"

using namespace clines;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "clines_command_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig config_for(const std::string& data, const fs::path& out) {
    RunConfig c;
    c.config = fixture::data_file(data);
    c.out = out;
    return c;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(int (*command)(const RunConfig&, std::ostream&, std::ostream&), const RunConfig& c) {
    std::ostringstream out, err;
    const int code = command(c, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("lambda overrides") {
    const ProblemSpec g = fixture::genetics(200.0);
    const ProblemSpec scaled = apply_lambdas(g, {50.0});
    CHECK(scaled.equations[0].lambda == 50.0);
    CHECK(scaled.equations[1].lambda == 50.0);
    const ProblemSpec each = apply_lambdas(g, {10.0, 20.0});
    CHECK(each.equations[1].lambda == 20.0);
    CHECK(apply_lambdas(g, {}) == g);
    CHECK_THROWS_AS(apply_lambdas(g, {1.0, 2.0, 3.0}), InvalidInput);
    CHECK(archive_name(200.0) == "lambda_200");
    CHECK(archive_name(0.5) == "lambda_0.5");
}

TEST_CASE("check accepts the bundled genetics example") {
    const Run r = run(run_check, config_for("genetics_two_locus.json", fresh_dir("check")));
    CHECK(r.code == exit_code::ok);
    const Json j = Json::parse(r.out);
    CHECK(j["admissibility"]["admissible"] == true);
}

TEST_CASE("check rejects an inadmissible problem with exit 2") {
    const fs::path dir = fresh_dir("check_bad");
    ProblemSpec spec = fixture::baseline();
    spec.equations[0].weight =
        WeightFunction({{CouplingPolynomial::constant(0), SpatialProfile::constant(fixture::unit, 1.0)}});
    write_file_atomic(dir / "bad.json", dump_json(problem_to_json(spec)));
    RunConfig c;
    c.config = dir / "bad.json";
    const Run r = run(run_check, c);
    CHECK(r.code == exit_code::inadmissible);
    CHECK(r.err.find("violation") != std::string::npos);
}

TEST_CASE("missing or malformed input is a usage error") {
    const fs::path dir = fresh_dir("usage");
    RunConfig c;
    c.config = dir / "nope.json";
    CHECK(run(run_check, c).code == exit_code::usage);
    write_file_atomic(dir / "broken.json", "{ \"schema\": ");
    c.config = dir / "broken.json";
    CHECK(run(run_solve, c).code == exit_code::usage);
    RunConfig sweep = config_for("step_weight_n1.json", dir);
    sweep.lambdas = {100.0};
    CHECK(run(run_sweep, sweep).code == exit_code::usage);
}

TEST_CASE("solve below unit strength on the baseline finds only the constants") {
    const fs::path dir = fresh_dir("weak");
    RunConfig c = config_for("step_weight_n1.json", dir);
    c.lambdas = {0.5};
    const Run r = run(run_solve, c);
    CHECK(r.code == exit_code::solver_failure);
    const Json census = read_json_file(dir / "lambda_0.5" / "census.json");
    CHECK(census["counts"]["total"] == 2);
    CHECK(census["counts"]["trivial"] == 2);
    CHECK(census["counts"]["not_all_constant"] == 0);
    CHECK(census["label_counts"].contains("(Zero)"));
    CHECK(census["label_counts"].contains("(One)"));
}

TEST_CASE("solve archives a verified census and verify accepts it") {
    const fs::path dir = fresh_dir("solve");
    const Run r = run(run_solve, config_for("step_weight_n1.json", dir));
    REQUIRE(r.code == exit_code::ok);
    const fs::path archive = dir / "lambda_100";
    const Json index = read_json_file(archive / "index.json");
    CHECK(index["schema"] == kArchiveSchema);
    CHECK(index["solutions"].size() == 4);
    for (const Json& s : index["solutions"]) CHECK(s["verified"] == true);
    CHECK(load_problem(archive / "problem.json") == fixture::baseline());

    RunConfig v;
    v.archive = archive;
    const Run ok = run(run_verify, v);
    CHECK(ok.code == exit_code::ok);
    CHECK(fs::exists(archive / "verification.json"));
}

TEST_CASE("verify flags a hand-corrupted archive") {
    const fs::path dir = fresh_dir("corrupt");
    REQUIRE(run(run_solve, config_for("step_weight_n1.json", dir)).code == exit_code::ok);
    const fs::path file = dir / "lambda_100" / "solutions" / "sol_001.csv";
    std::string text = read_text_file(file);
    std::istringstream lines(text);
    std::string line, patched;
    for (int k = 0; std::getline(lines, line); ++k) {
        if (k == 200) {
            const std::size_t a = line.find(','), b = line.find(',', a + 1);
            const double v = std::stod(line.substr(a + 1, b - a - 1)) + 0.1;
            line = line.substr(0, a + 1) + format_double(v) + line.substr(b);
        }
        patched += line + "\n";
    }
    write_file_atomic(file, patched);
    RunConfig v;
    v.archive = dir / "lambda_100";
    const Run r = run(run_verify, v);
    CHECK(r.code == exit_code::verification_failure);
    CHECK(r.out.find("sol_001.csv: residual") != std::string::npos);
    const Json report = read_json_file(dir / "lambda_100" / "verification.json");
    CHECK(report["passed"] == false);
}

TEST_CASE("solve is byte-for-byte reproducible apart from the timestamp") {
    const fs::path a = fresh_dir("repeat_a"), b = fresh_dir("repeat_b");
    REQUIRE(run(run_solve, config_for("step_weight_n1.json", a)).code == exit_code::ok);
    REQUIRE(run(run_solve, config_for("step_weight_n1.json", b)).code == exit_code::ok);
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), a);
        REQUIRE(fs::exists(b / rel));
        if (rel.filename() == "index.json") {
            Json ja = read_json_file(entry.path()), jb = read_json_file(b / rel);
            ja["metadata"].erase("timestamp");
            jb["metadata"].erase("timestamp");
            CHECK(ja == jb);
        } else {
            CHECK(read_text_file(entry.path()) == read_text_file(b / rel));
        }
        ++compared;
    }
    CHECK(compared >= 7);
}

TEST_CASE("genetics writes a loadable problem and a passing identity report") {
    const fs::path dir = fresh_dir("genetics");
    RunConfig c = config_for("genetics_two_locus.json", dir);
    c.samples = 2000;
    const Run r = run(run_genetics, c);
    REQUIRE(r.code == exit_code::ok);
    CHECK(load_problem(dir / "problem.json") == fixture::genetics());
    const Json rep = read_json_file(dir / "genetics_report.json");
    CHECK(rep["identity"]["samples"] == 2000);
    CHECK(rep["identity"]["passed"] == true);
}

TEST_CASE("sweep writes branch traces and threshold estimates") {
    const fs::path dir = fresh_dir("sweep");
    RunConfig c = config_for("step_weight_n1.json", dir);
    c.lambdas = {100.0, 99.5, 99.0, 98.5};
    c.rho = 0.5;
    const Run r = run(run_sweep, c);
    REQUIRE(r.code == exit_code::ok);
    const Json j = read_json_file(dir / "sweep" / "sweep.json");
    CHECK(j["branches"].size() == 2);
    CHECK(j["lambda_star"].size() == 1);
    CHECK(j["lambda_star"][0]["rho"] == 0.5);
    CHECK(j["mu_bound"].get<double>() > 0.0);
    const std::string trace = read_text_file(dir / "sweep" / "branch_000.csv");
    CHECK(trace.rfind("lambda_scale,c1,residual,label\n", 0) == 0);
}
