// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "clines/classification.hpp"
#include "clines/commands.hpp"
#include "clines/compiled_system.hpp"
#include "clines/continuation.hpp"
#include "clines/genetics.hpp"
#include "clines/grid_solver.hpp"
#include "clines/io.hpp"
#include "clines/shooting.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace clines;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [" << what << "]";
        }
    }
};

struct Archive {
    ProblemSpec spec;
    Json index;
    std::vector<SolutionProfile> solutions;
};

fs::path work_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "clines_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int solve_into(const fs::path& out, const std::string& data, std::vector<double> lambdas = {}) {
    RunConfig c;
    c.config = fixture::data_file(data);
    c.out = out;
    c.grid = 64;
    c.tol = 1e-9;
    c.lambdas = std::move(lambdas);
    std::ostringstream sink_out, sink_err;
    return run_solve(c, sink_out, sink_err);
}

Archive load_archive(const fs::path& dir) {
    Archive a;
    a.spec = load_problem(dir / "problem.json");
    a.index = read_json_file(dir / "index.json");
    for (const Json& e : a.index["solutions"]) {
        const std::string file = e["file"];
        a.solutions.push_back(solution_from_csv(read_text_file(dir / file), a.spec, file));
    }
    return a;
}

bool constant_solution(const SolutionProfile& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.sup_norm(i) != 0.0 && s.sup_distance_to_one(i) != 0.0) return false;
    }
    return true;
}

std::string tree_without_timestamp(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const fs::path& rel : files) {
        all += "== " + rel.generic_string() + "\n";
        if (rel.filename() == "index.json") {
            Json j = read_json_file(root / rel);
            j["metadata"].erase("timestamp");
            all += dump_json(j);
        } else {
            all += read_text_file(root / rel);
        }
    }
    return all;
}

void report(int id, const std::string& name, const Outcome& o, bool& all) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << name << o.detail.str() << std::endl;
    all = all && o.pass;
}

// Shared state: the genetics archive is produced once and reused.
const fs::path genetics_dir = fs::temp_directory_path() / "clines_acceptance" / "genetics";
double genetics_seconds = 0.0;
int genetics_code = -1;

Outcome genetics_census() {
    Outcome o;
    fs::remove_all(genetics_dir);
    fs::create_directories(genetics_dir);
    const auto t0 = std::chrono::steady_clock::now();
    genetics_code = solve_into(genetics_dir, "genetics_two_locus.json");
    genetics_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail << " time " << genetics_seconds << " s";
    o.require(genetics_code == exit_code::ok, "exit code " + std::to_string(genetics_code));
    o.require(genetics_seconds <= 60.0, "runtime over 60 s");
    const Archive a = load_archive(genetics_dir / "lambda_200");
    std::set<std::string> labels;
    std::size_t fully = 0;
    for (std::size_t k = 0; k < a.solutions.size(); ++k) {
        const Json& e = a.index["solutions"][k];
        if (e["aggregate"] != "fully-nontrivial") continue;
        ++fully;
        labels.insert(e["label"].get<std::string>());
        o.require(verify(a.solutions[k], a.spec).passed(), "unverified " + e["file"].get<std::string>());
    }
    o.detail << ", " << fully << " fully nontrivial";
    o.require(fully >= 4, "fewer than 4 fully nontrivial");
    for (const char* want : {"(SmallOnI,SmallOnI)", "(SmallOnI,LargeOnI)", "(LargeOnI,SmallOnI)", "(LargeOnI,LargeOnI)"}) {
        o.require(labels.count(want) == 1, std::string("missing ") + want);
    }
    return o;
}

Outcome baseline_roots() {
    Outcome o;
    const MultistartResult res = multistart(fixture::baseline(100.0));
    const std::vector<double> truth = oracle::baseline_roots(100.0);
    std::size_t nontrivial = 0;
    for (const SolutionProfile& s : res.solutions) {
        const double c = s.initial_value[0];
        if (c == 0.0 || c == 1.0) continue;
        ++nontrivial;
        const bool hit = std::any_of(truth.begin(), truth.end(), [c](double r) { return std::abs(r - c) <= 1e-8; });
        o.require(hit, "no oracle root near " + format_double(c));
    }
    for (double r : truth) {
        const bool found = std::any_of(res.solutions.begin(), res.solutions.end(),
                                       [r](const SolutionProfile& s) { return std::abs(s.initial_value[0] - r) <= 1e-8; });
        o.require(found, "oracle root " + format_double(r) + " missed");
    }
    o.detail << " " << nontrivial << " nontrivial, " << truth.size() << " oracle roots";
    o.require(nontrivial >= 2, "fewer than 2 nontrivial");
    return o;
}

Outcome decoupled_product() {
    Outcome o;
    const ProblemSpec spec = fixture::decoupled(100.0);
    const MultistartResult two = multistart(spec);
    const MultistartResult one = multistart(fixture::baseline(100.0));
    std::vector<std::vector<double>> product;
    for (const SolutionProfile& a : one.solutions) {
        for (const SolutionProfile& b : one.solutions) product.push_back({a.initial_value[0], b.initial_value[0]});
    }
    auto close = [](const std::vector<double>& u, const std::vector<double>& v) {
        return std::abs(u[0] - v[0]) <= 1e-8 && std::abs(u[1] - v[1]) <= 1e-8;
    };
    o.require(two.solutions.size() == product.size(), "set sizes differ");
    for (const auto& p : product) {
        const bool hit = std::any_of(two.solutions.begin(), two.solutions.end(),
                                     [&](const SolutionProfile& s) { return close(s.initial_value, p); });
        o.require(hit, "product point missing");
    }
    const CensusReport rep = census(two.solutions, spec, auto_thresholds(two.solutions, spec));
    o.detail << " " << two.solutions.size() << " solutions, realizable " << rep.realizable_not_all_constant;
    o.require(rep.unpopulated_fully_nontrivial.empty(), "unpopulated fully nontrivial class");
    o.require(rep.realizable_not_all_constant == 12, "realizable count");
    return o;
}

Outcome lambda_star_example() {
    Outcome o;
    const ProblemSpec spec = fixture::baseline();
    const double star = lambda_star_at(spec, 0, 0.5, 0.05).lambda_star;
    o.detail << " lambda* " << star;
    o.require(std::abs(star - 7314.3) / 7314.3 <= 1e-3, "lambda* off by more than 0.1%");
    const fs::path dir = work_dir("above_star");
    solve_into(dir, "step_weight_n1.json", {7500.0});
    const Archive a = load_archive(dir / "lambda_7500");
    const Interval I = a.spec.equations[0].positivity;
    for (const SolutionProfile& s : a.solutions) {
        const double m = s.max_on(0, I.lower, I.upper);
        o.require(std::abs(m - 0.5) > 1e-3, "max on I near 0.5: " + format_double(m));
    }
    o.detail << ", " << a.solutions.size() << " archived above lambda*";
    return o;
}

Outcome fd_agreement() {
    Outcome o;
    std::vector<std::pair<ProblemSpec, SolutionProfile>> cases;
    for (const ProblemSpec& spec : {fixture::baseline(100.0), fixture::decoupled(100.0)}) {
        for (const SolutionProfile& s : multistart(spec).solutions) cases.emplace_back(spec, s);
    }
    const Archive g = load_archive(genetics_dir / "lambda_200");
    for (const SolutionProfile& s : g.solutions) cases.emplace_back(g.spec, s);
    double lo = 1e300, hi = 0.0;
    std::size_t used = 0;
    for (const auto& [spec, s] : cases) {
        if (constant_solution(s)) continue;
        double dist[2];
        bool ok = true;
        for (int m = 0; m < 2; ++m) {
            const Grid grid = Grid::uniform(spec.domain, m == 0 ? 256 : 512);
            const std::vector<double> exact = sample_on_grid(s, grid);
            const FdOutcome fd = fd_newton(spec, grid, exact);
            ok = ok && fd.ok();
            dist[m] = 0.0;
            for (std::size_t k = 0; ok && k < exact.size(); ++k) dist[m] = std::max(dist[m], std::abs(fd.values[k] - exact[k]));
        }
        o.require(ok, "fd Newton failed");
        if (!ok) continue;
        const double ratio = dist[0] / dist[1];
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        ++used;
        if (!(ratio >= 3.0 && ratio <= 5.0)) o.require(false, "ratio " + format_double(ratio));
    }
    o.detail << " " << used << " solutions, ratios in [" << lo << ", " << hi << "]";
    o.require(used > 0, "no nonconstant solution");
    return o;
}

Outcome archived_invariants() {
    Outcome o;
    std::size_t checked = 0;
    const Archive g = load_archive(genetics_dir / "lambda_200");
    const fs::path bdir = work_dir("baseline");
    solve_into(bdir, "step_weight_n1.json");
    const Archive b = load_archive(bdir / "lambda_100");
    for (const Archive* a : {&g, &b}) {
        const CompiledSystem sys(a->spec);
        for (const SolutionProfile& s : a->solutions) {
            const VerificationReport vr = verify(s, a->spec);
            for (const std::string& f : vr.failures()) o.require(false, f);
            for (double v : rhs_integrals(sys, s)) o.require(std::abs(v) <= 1e-6, "integral " + format_double(v));
            ++checked;
        }
    }
    const SelectionIdentityReport id = check_selection_identities(fixture::genetics_fitness(), g.spec, 10000, 7);
    o.require(id.samples == 10000 && id.passed(1e-12), "selection identity");
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
        double sum = 0.0;
        for (const auto& row : hardy_weinberg(u(rng), u(rng))) {
            for (double v : row) sum += v;
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    o.require(worst <= 1e-14, "genotype frequencies sum " + format_double(worst));
    o.detail << " " << checked << " solutions, identity error " << std::max(id.max_error_a, id.max_error_b);
    return o;
}

Outcome mu_branches() {
    Outcome o;
    const Archive g = load_archive(genetics_dir / "lambda_200");
    const double bound = mu_bound(g.spec);
    std::vector<double> mus;
    for (int k = 0; k <= 300; ++k) mus.push_back(1.5 * bound * k / 300.0);
    double furthest = 0.0;
    std::size_t branches = 0;
    for (std::size_t k = 0; k < g.solutions.size(); ++k) {
        if (g.index["solutions"][k]["aggregate"] != "fully-nontrivial") continue;
        const Branch br = continue_branch(g.spec, g.solutions[k], ContinuationParameter::mu, mus);
        ++branches;
        const double end = br.points.back().parameter;
        furthest = std::max(furthest, end);
        o.require(br.termination != BranchTermination::converged_at_end, "branch passed 1.5 x bound");
        o.require(end <= bound, "branch ended at " + format_double(end));
    }
    o.detail << " " << branches << " branches, furthest mu " << furthest << ", bound " << bound;
    o.require(branches >= 4, "fewer than 4 branches");
    return o;
}

Outcome reproducible() {
    Outcome o;
    const fs::path again = work_dir("genetics_again");
    solve_into(again, "genetics_two_locus.json");
    o.require(tree_without_timestamp(genetics_dir) == tree_without_timestamp(again), "archives differ");
    return o;
}

}  // namespace

int main() {
    bool all = true;
    auto guarded = [&](int id, const std::string& name, Outcome (*fn)()) {
        try {
            report(id, name, fn(), all);
        } catch (const std::exception& e) {
            Outcome o;
            o.require(false, std::string("exception: ") + e.what());
            report(id, name, o, all);
        }
    };
    guarded(1, "two-locus census within 60 s", genetics_census);
    guarded(2, "single-locus roots match the scan oracle", baseline_roots);
    guarded(3, "decoupled solution set is the product", decoupled_product);
    guarded(4, "no solution at the threshold above lambda*", lambda_star_example);
    guarded(5, "finite differences converge at second order", fd_agreement);
    guarded(6, "archived solutions satisfy every invariant", archived_invariants);
    guarded(7, "mu branches end below the bound", mu_branches);
    guarded(8, "repeated solves give identical archives", reproducible);
    return all ? 0 : 1;
}
