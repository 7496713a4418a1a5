#include "clines/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <sstream>

#include "clines/continuation.hpp"
#include "clines/error.hpp"
#include "clines/genetics.hpp"
#include "clines/io.hpp"
#include "clines/shooting.hpp"

namespace clines {

namespace fs = std::filesystem;

namespace {

constexpr double kIdentityTolerance = 1e-12;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

std::string numbered(const char* stem, std::size_t k, const char* ext) {
    std::ostringstream ss;
    ss << stem << std::setw(3) << std::setfill('0') << k << ext;
    return ss.str();
}

Json numbers_json(const std::vector<double>& v) { return Json(v); }

struct ThresholdChoice {
    Thresholds thresholds;
    std::string source;
    std::string note;
};

ThresholdChoice choose_thresholds(const RunConfig& config, const std::vector<SolutionProfile>& sols,
                                  const ProblemSpec& spec) {
    if (config.thresholds) return {*config.thresholds, "manual", {}};
    try {
        return {auto_thresholds(sols, spec), "auto", {}};
    } catch (const DomainError& e) {
        return {fallback_thresholds(), "fallback", e.what()};
    }
}

Json thresholds_entry(const ThresholdChoice& c) {
    Json j = thresholds_to_json(c.thresholds);
    j["source"] = c.source;
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

template <class Body>
int guarded(std::ostream& err, Body body) {
    try {
        return body();
    } catch (const ModelConditionError& e) {
        err << "error: " << e.what() << "\n";
        for (const std::string& v : e.report().violations()) err << "  " << v << "\n";
        return exit_code::inadmissible;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::solver_failure;
    }
}

ProblemSpec load_configured(const RunConfig& config) {
    if (config.config.empty()) throw InvalidInput("--config: a problem or genetics file is required");
    return load_problem(config.config);
}

}  // namespace

ProblemSpec apply_lambdas(const ProblemSpec& spec, const std::vector<double>& lambdas) {
    if (lambdas.empty()) return spec;
    for (double l : lambdas) {
        if (!(l > 0.0) || !std::isfinite(l)) throw InvalidInput("--lambda: values must be positive");
    }
    if (lambdas.size() == 1) return spec.with_lambda_scale(lambdas[0] / spec.equations[0].lambda);
    if (lambdas.size() == spec.size()) return spec.with_lambdas(lambdas);
    throw InvalidInput("--lambda: expected 1 or " + std::to_string(spec.size()) + " values");
}

std::string archive_name(double lambda1) { return "lambda_" + format_double(lambda1); }

Thresholds fallback_thresholds() {
    Thresholds th;
    th.r = 0.01;
    th.rho = 0.5;
    th.R = 0.999;
    return th;
}

int run_check(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ProblemSpec spec = apply_lambdas(load_configured(config), config.lambdas);
        const AdmissibilityReport report = check_admissibility(spec);
        Json j;
        j["schema"] = kRunSchema;
        j["command"] = "check";
        j["admissibility"] = admissibility_to_json(report);
        out << dump_json(j);
        if (!report.admissible()) {
            for (const std::string& v : report.violations()) err << "violation: " << v << "\n";
            return exit_code::inadmissible;
        }
        return exit_code::ok;
    });
}

int run_solve(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ProblemSpec spec = apply_lambdas(load_configured(config), config.lambdas);
        const AdmissibilityReport report = check_admissibility(spec);
        if (!report.admissible()) {
            for (const std::string& v : report.violations()) err << "violation: " << v << "\n";
            return exit_code::inadmissible;
        }
        MultistartOptions mo;
        mo.grid_per_axis = config.grid;
        mo.tol = config.tol.value_or(1e-9);
        mo.jobs = config.jobs;
        const MultistartResult result = multistart(spec, mo);
        const ThresholdChoice th = choose_thresholds(config, result.solutions, spec);
        const CensusReport cen = census(result.solutions, spec, th.thresholds);

        const std::size_t n = spec.size();
        const std::size_t wanted = std::size_t{1} << n;
        const int code = cen.fully_nontrivial >= wanted ? exit_code::ok : exit_code::solver_failure;

        const fs::path dir = config.out / archive_name(spec.equations[0].lambda);
        fs::remove_all(dir / "solutions");
        write_file_atomic(dir / "problem.json", dump_json(problem_to_json(spec)));

        Json sols = Json::array();
        std::size_t verified = 0;
        for (std::size_t k = 0; k < result.solutions.size(); ++k) {
            const SolutionProfile& s = result.solutions[k];
            const std::string file = "solutions/" + numbered("sol_", k, ".csv");
            write_file_atomic(dir / file, solution_to_csv(s));
            const VerificationReport vr = verify(s, spec);
            verified += vr.passed() ? 1 : 0;
            const Classification& c = cen.entries[k];
            sols.push_back({{"file", file},
                            {"initial_value", numbers_json(s.initial_value)},
                            {"residual_sup", s.residual_sup},
                            {"neumann_left", numbers_json(s.neumann_left)},
                            {"neumann_right", numbers_json(s.neumann_right)},
                            {"label", c.label ? Json(c.label->to_string()) : Json(nullptr)},
                            {"aggregate", c.label ? to_string(c.label->aggregate) : "unclassifiable"},
                            {"verified", vr.passed()}});
        }

        Json cj;
        cj["schema"] = kRunSchema;
        cj["command"] = "solve";
        cj.update(census_to_json(cen));
        cj["thresholds"] = thresholds_entry(th);
        write_file_atomic(dir / "census.json", dump_json(cj));

        std::map<std::string, std::size_t> failures;
        for (const StartFailure& f : result.failures) ++failures[to_string(f.status)];
        Json index;
        index["schema"] = kArchiveSchema;
        index["metadata"] = {{"timestamp", utc_timestamp()}};
        index["problem"] = "problem.json";
        index["census"] = "census.json";
        index["lambdas"] = numbers_json(spec.lambdas());
        index["mu"] = spec.mu;
        index["settings"] = {{"grid_per_axis", mo.grid_per_axis}, {"tol", mo.tol},    {"dedup_tol", mo.dedup_tol},
                             {"jobs", mo.jobs},                   {"seed", config.seed}};
        index["multistart"] = {{"starts", result.starts},
                               {"bracketed_cells", result.bracketed_cells},
                               {"degenerate", result.degenerate},
                               {"failures", failures}};
        index["thresholds"] = thresholds_entry(th);
        index["solutions"] = sols;
        index["exit_code"] = code;
        write_file_atomic(dir / "index.json", dump_json(index));

        out << "archive " << dir.string() << "\n";
        out << "solutions " << cen.total << " (trivial " << cen.trivial << ", semitrivial " << cen.semitrivial
            << ", fully nontrivial " << cen.fully_nontrivial << ", unclassifiable " << cen.unclassifiable << ")\n";
        out << "verified " << verified << "/" << result.solutions.size() << "\n";
        out << "thresholds " << th.source << " r=" << th.thresholds.r << " rho=" << th.thresholds.rho
            << " R=" << th.thresholds.R << "\n";
        if (!cen.unpopulated_fully_nontrivial.empty()) {
            out << "unpopulated fully nontrivial classes:";
            for (const std::string& s : cen.unpopulated_fully_nontrivial) out << " " << s;
            out << "\n";
        }
        if (code != exit_code::ok) {
            err << "found " << cen.fully_nontrivial << " fully nontrivial solutions, fewer than 2^N = " << wanted
                << "\n";
        }
        return code;
    });
}

int run_sweep(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ProblemSpec base = load_configured(config);
        if (config.lambdas.size() < 2) throw InvalidInput("--lambda: sweep needs at least two lambda_1 values");
        std::vector<double> scales;
        for (double l : config.lambdas) {
            if (!(l > 0.0)) throw InvalidInput("--lambda: values must be positive");
            scales.push_back(l / base.equations[0].lambda);
        }
        const ProblemSpec first = base.with_lambda_scale(scales[0]);

        MultistartOptions mo;
        mo.grid_per_axis = config.grid;
        mo.tol = config.tol.value_or(1e-9);
        mo.jobs = config.jobs;
        const MultistartResult start = multistart(first, mo);
        const ThresholdChoice th = choose_thresholds(config, start.solutions, first);

        ContinuationOptions co;
        co.newton.tol = mo.tol;
        const fs::path dir = config.out / "sweep";
        fs::remove_all(dir);
        Json branches = Json::array();
        std::size_t k = 0;
        for (const SolutionProfile& seed : start.solutions) {
            bool constant = true;
            for (const ComponentMeasurement& m : measure(seed, first)) {
                constant = constant && (m.sup_norm <= th.thresholds.const_tol || m.distance_to_one <= th.thresholds.const_tol);
            }
            if (constant) continue;
            const Branch b = continue_branch(base, seed, ContinuationParameter::lambda_scale, scales, co);
            const std::string file = numbered("branch_", k++, ".csv");
            write_file_atomic(dir / file, branch_to_csv(b, base, th.thresholds));
            branches.push_back({{"file", file},
                                {"seed_initial_value", numbers_json(seed.initial_value)},
                                {"points", b.points.size()},
                                {"last_lambda_1", b.points.back().parameter * base.equations[0].lambda},
                                {"termination", to_string(b.termination)},
                                {"message", b.message}});
        }

        std::vector<double> rhos;
        if (config.rho) {
            rhos.push_back(*config.rho);
        } else {
            for (int q = 1; q <= 9; ++q) rhos.push_back(0.1 * q);
        }
        Json stars = Json::array();
        for (std::size_t i = 0; i < base.size(); ++i) {
            for (double rho : rhos) {
                try {
                    stars.push_back(lambda_star_to_json(lambda_star_estimate(base, i, rho)));
                } catch (const DomainError& e) {
                    stars.push_back({{"equation", i + 1}, {"rho", rho}, {"lambda_star", nullptr}, {"note", e.what()}});
                }
            }
        }

        Json j;
        j["schema"] = kRunSchema;
        j["command"] = "sweep";
        j["lambda_1"] = numbers_json(config.lambdas);
        j["thresholds"] = thresholds_entry(th);
        j["branches"] = branches;
        j["lambda_star"] = stars;
        j["mu_bound"] = mu_bound(first);
        write_file_atomic(dir / "sweep.json", dump_json(j));
        out << "sweep " << dir.string() << ": " << branches.size() << " branches\n";
        return exit_code::ok;
    });
}

int run_genetics(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (config.config.empty()) throw InvalidInput("--config: a genetics file is required");
        const Json raw = read_json_file(config.config);
        GeneticsInput in = genetics_from_json(raw);
        ProblemSpec spec = apply_lambdas(build_genetics(in), config.lambdas);
        const AdmissibilityReport report = check_admissibility(spec);

        Json j;
        j["schema"] = kRunSchema;
        j["command"] = "genetics";
        j["admissibility"] = admissibility_to_json(report);
        Json intervals = Json::array();
        for (const Equation& e : spec.equations) intervals.push_back({e.positivity.lower, e.positivity.upper});
        j["positivity_intervals"] = intervals;

        bool identity_ok = true;
        if (spec.size() == 2) {
            FitnessSet fit = in.fitness;
            if (in.phenotypes) {
                const auto& ph = *in.phenotypes;
                fit.r_AB = ph[0];
                fit.r_aB = ph[1];
                fit.r_Ab = ph[2];
                fit.r_ab = ph[3];
            }
            const SelectionIdentityReport id = check_selection_identities(fit, spec, config.samples, config.seed);
            identity_ok = id.passed(kIdentityTolerance);
            j["identity"] = {{"samples", id.samples},         {"seed", config.seed},
                             {"max_error_a", id.max_error_a}, {"max_error_b", id.max_error_b},
                             {"tolerance", kIdentityTolerance}, {"passed", identity_ok}};
        } else {
            j["identity"] = nullptr;
        }

        write_file_atomic(config.out / "problem.json", dump_json(problem_to_json(spec)));
        write_file_atomic(config.out / "genetics_report.json", dump_json(j));
        out << "wrote " << (config.out / "problem.json").string() << "\n";
        if (!report.admissible()) {
            for (const std::string& v : report.violations()) err << "violation: " << v << "\n";
            return exit_code::inadmissible;
        }
        if (!identity_ok) {
            err << "selection identity exceeds " << kIdentityTolerance << "\n";
            return exit_code::verification_failure;
        }
        return exit_code::ok;
    });
}

int run_verify(const RunConfig& config, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const fs::path dir = config.archive.empty() ? config.out : config.archive;
        const Json index = read_json_file(dir / "index.json");
        if (!index.contains("schema") || index["schema"] != kArchiveSchema) {
            throw InvalidInput((dir / "index.json").string() + ": $.schema: expected \"" + kArchiveSchema + "\"");
        }
        const ProblemSpec spec = problem_from_json(read_json_file(dir / index.value("problem", "problem.json")));
        const VerificationTolerances tol =
            config.tol ? VerificationTolerances::uniform(*config.tol) : VerificationTolerances{};

        Json reports = Json::array();
        std::size_t failed = 0;
        if (!index.contains("solutions") || !index["solutions"].is_array()) {
            throw InvalidInput((dir / "index.json").string() + ": $.solutions: expected an array");
        }
        for (const Json& entry : index["solutions"]) {
            const std::string file = entry.value("file", "");
            const SolutionProfile s = solution_from_csv(read_text_file(dir / file), spec, (dir / file).string());
            const VerificationReport vr = verify(s, spec, tol);
            Json r = verification_to_json(vr);
            r["file"] = file;
            reports.push_back(r);
            if (!vr.passed()) {
                ++failed;
                for (const std::string& f : vr.failures()) out << file << ": " << f << "\n";
            }
        }
        Json j;
        j["schema"] = kRunSchema;
        j["command"] = "verify";
        j["archive"] = dir.string();
        j["passed"] = failed == 0;
        j["reports"] = reports;
        write_file_atomic(dir / "verification.json", dump_json(j));
        out << "verified " << reports.size() - failed << "/" << reports.size() << "\n";
        return failed == 0 ? exit_code::ok : exit_code::verification_failure;
    });
}

}  // namespace clines
