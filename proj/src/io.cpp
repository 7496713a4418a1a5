#include "clines/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "clines/compiled_system.hpp"
#include "clines/error.hpp"

namespace clines {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw InvalidInput(where + ": " + what); }

const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(where + "." + key, "missing");
    return *it;
}

double number(const Json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

double number_field(const Json& j, const char* key, const std::string& where) {
    return number(field(j, key, where), where + "." + key);
}

std::vector<double> numbers(const Json& j, const std::string& where) {
    if (!j.is_array()) fail(where, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
    return out;
}

Interval interval(const Json& j, const std::string& where) {
    const std::vector<double> v = numbers(j, where);
    if (v.size() != 2) fail(where, "expected [lower, upper]");
    if (!(v[0] < v[1])) fail(where, "lower bound must be below upper bound");
    return {v[0], v[1]};
}

Json interval_to_json(Interval I) { return Json::array({I.lower, I.upper}); }

void check_schema(const Json& j, const char* expected) {
    const Json& tag = field(j, "schema", "$");
    if (!tag.is_string() || tag.get<std::string>() != expected) {
        fail("$.schema", std::string("expected \"") + expected + "\"");
    }
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput(path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json_file(const fs::path& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_of(text, e.byte) << ": malformed JSON (" << e.what() << ")";
        throw InvalidInput(msg.str());
    }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_file_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw Error(tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(path.string() + ": rename failed (" + ec.message() + ")");
}

Json profile_to_json(const SpatialProfile& p) {
    Json j;
    j["nodes"] = std::vector<double>(p.nodes().begin(), p.nodes().end());
    j["values"] = std::vector<double>(p.values().begin(), p.values().end());
    return j;
}

SpatialProfile profile_from_json(const Json& j, Interval domain, const std::string& where) {
    if (j.is_number()) return SpatialProfile::constant(domain, j.get<double>());
    if (!j.is_object()) fail(where, "expected a profile object");
    if (j.contains("constant")) return SpatialProfile::constant(domain, number_field(j, "constant", where));
    if (j.contains("step")) {
        const std::string w = where + ".step";
        const Json& s = j["step"];
        try {
            return SpatialProfile::step(domain, number_field(s, "a", w), number_field(s, "b", w),
                                        number_field(s, "inside", w), number_field(s, "outside", w),
                                        number_field(s, "ramp", w));
        } catch (const InvalidInput& e) {
            if (std::string(e.what()).rfind(w, 0) == 0) throw;
            fail(w, e.what());
        }
    }
    std::vector<double> nodes = numbers(field(j, "nodes", where), where + ".nodes");
    std::vector<double> values = numbers(field(j, "values", where), where + ".values");
    if (nodes.empty() || nodes.front() != domain.lower || nodes.back() != domain.upper) {
        fail(where + ".nodes", "must start at " + format_double(domain.lower) + " and end at " +
                                   format_double(domain.upper));
    }
    try {
        return SpatialProfile(std::move(nodes), std::move(values));
    } catch (const Error& e) {
        fail(where, e.what());
    }
}

Json problem_to_json(const ProblemSpec& spec) {
    Json j;
    j["schema"] = kProblemSchema;
    j["interval"] = interval_to_json(spec.domain);
    j["mu"] = spec.mu;
    Json eqs = Json::array();
    for (const Equation& e : spec.equations) {
        Json je;
        je["lambda"] = e.lambda;
        je["positivity_interval"] = interval_to_json(e.positivity);
        je["nonlinearity"] = {{"scale", e.nonlinearity.scale}, {"a", e.nonlinearity.a}, {"b", e.nonlinearity.b}};
        Json terms = Json::array();
        for (const WeightTerm& t : e.weight.terms()) {
            Json monos = Json::array();
            for (const Monomial& m : t.coupling.terms()) {
                monos.push_back({{"coefficient", m.coefficient}, {"exponents", m.exponents}});
            }
            terms.push_back({{"coupling", monos}, {"profile", profile_to_json(t.profile)}});
        }
        je["weight"] = terms;
        if (!e.forcing.empty()) je["forcing"] = profile_to_json(e.forcing);
        eqs.push_back(je);
    }
    j["equations"] = eqs;
    return j;
}

ProblemSpec problem_from_json(const Json& j) {
    check_schema(j, kProblemSchema);
    ProblemSpec spec;
    spec.domain = interval(field(j, "interval", "$"), "$.interval");
    spec.mu = j.contains("mu") ? number(j["mu"], "$.mu") : 0.0;
    const Json& eqs = field(j, "equations", "$");
    if (!eqs.is_array() || eqs.empty()) fail("$.equations", "expected a non-empty array");
    const std::size_t n = eqs.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::string w = "$.equations[" + std::to_string(i) + "]";
        const Json& je = eqs[i];
        Equation e{WeightFunction({WeightTerm{CouplingPolynomial::constant(n - 1, 0.0),
                                              SpatialProfile::constant(spec.domain, 0.0)}}),
                   Nonlinearity::dominance(), 1.0, spec.domain, {}};
        e.lambda = number_field(je, "lambda", w);
        e.positivity = interval(field(je, "positivity_interval", w), w + ".positivity_interval");
        if (je.contains("nonlinearity")) {
            const Json& f = je["nonlinearity"];
            const std::string wf = w + ".nonlinearity";
            try {
                e.nonlinearity = Nonlinearity(number_field(f, "scale", wf), number_field(f, "a", wf),
                                              number_field(f, "b", wf));
            } catch (const InvalidInput& ex) {
                if (std::string(ex.what()).rfind(wf, 0) == 0) throw;
                fail(wf, ex.what());
            }
        }
        const Json& terms = field(je, "weight", w);
        if (!terms.is_array() || terms.empty()) fail(w + ".weight", "expected a non-empty array of terms");
        std::vector<WeightTerm> wts;
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const std::string wt = w + ".weight[" + std::to_string(t) + "]";
            const Json& monos = field(terms[t], "coupling", wt);
            if (!monos.is_array()) fail(wt + ".coupling", "expected an array of monomials");
            std::vector<Monomial> ms;
            for (std::size_t m = 0; m < monos.size(); ++m) {
                const std::string wm = wt + ".coupling[" + std::to_string(m) + "]";
                Monomial mono;
                mono.coefficient = number_field(monos[m], "coefficient", wm);
                for (double x : numbers(field(monos[m], "exponents", wm), wm + ".exponents")) {
                    if (x < 0 || x != static_cast<int>(x)) fail(wm + ".exponents", "expected nonnegative integers");
                    mono.exponents.push_back(static_cast<int>(x));
                }
                if (mono.exponents.size() != n - 1) {
                    fail(wm + ".exponents", "expected " + std::to_string(n - 1) + " entries (N-1)");
                }
                ms.push_back(std::move(mono));
            }
            wts.push_back({CouplingPolynomial(n - 1, std::move(ms)),
                           profile_from_json(field(terms[t], "profile", wt), spec.domain, wt + ".profile")});
        }
        e.weight = WeightFunction(std::move(wts));
        if (je.contains("forcing") && !je["forcing"].is_null()) {
            e.forcing = profile_from_json(je["forcing"], spec.domain, w + ".forcing");
        }
        spec.equations.push_back(std::move(e));
    }
    try {
        spec.validate();
    } catch (const InvalidInput& ex) {
        fail("$", ex.what());
    }
    return spec;
}

GeneticsInput genetics_from_json(const Json& j) {
    check_schema(j, kGeneticsSchema);
    GeneticsInput in;
    const Interval domain = interval(field(j, "interval", "$"), "$.interval");
    in.fitness.kappa = j.contains("kappa") ? profile_from_json(j["kappa"], domain, "$.kappa")
                                           : SpatialProfile::constant(domain, 1.0);
    in.fitness.kappa_min = j.contains("kappa_min") ? number(j["kappa_min"], "$.kappa_min") : 0.0;
    if (j.contains("phenotypes")) {
        const Json& ph = j["phenotypes"];
        if (!ph.is_array()) fail("$.phenotypes", "expected an array of profiles indexed by mask");
        std::vector<SpatialProfile> list;
        for (std::size_t k = 0; k < ph.size(); ++k) {
            list.push_back(profile_from_json(ph[k], domain, "$.phenotypes[" + std::to_string(k) + "]"));
        }
        in.phenotypes = std::move(list);
    } else {
        const Json& fit = field(j, "fitness", "$");
        in.fitness.r_ab = profile_from_json(field(fit, "r_ab", "$.fitness"), domain, "$.fitness.r_ab");
        in.fitness.r_Ab = profile_from_json(field(fit, "r_Ab", "$.fitness"), domain, "$.fitness.r_Ab");
        in.fitness.r_aB = profile_from_json(field(fit, "r_aB", "$.fitness"), domain, "$.fitness.r_aB");
        in.fitness.r_AB = profile_from_json(field(fit, "r_AB", "$.fitness"), domain, "$.fitness.r_AB");
    }
    if (j.contains("lambda")) {
        const Json& l = j["lambda"];
        in.options.lambdas = l.is_array() ? numbers(l, "$.lambda") : std::vector<double>{number(l, "$.lambda")};
    }
    if (j.contains("positivity_intervals")) {
        const Json& ps = j["positivity_intervals"];
        if (!ps.is_array()) fail("$.positivity_intervals", "expected an array of intervals or nulls");
        for (std::size_t k = 0; k < ps.size(); ++k) {
            if (ps[k].is_null()) {
                in.options.positivity.emplace_back();
            } else {
                in.options.positivity.emplace_back(interval(ps[k], "$.positivity_intervals[" + std::to_string(k) + "]"));
            }
        }
    }
    return in;
}

ProblemSpec build_genetics(const GeneticsInput& in) {
    if (in.phenotypes) return build_n_locus(*in.phenotypes, in.fitness.kappa, in.options, in.fitness.kappa_min);
    return build_two_locus(in.fitness, in.options);
}

ProblemSpec load_problem(const fs::path& path) {
    const Json j = read_json_file(path);
    const std::string tag = j.is_object() && j.contains("schema") && j["schema"].is_string() ? j["schema"].get<std::string>() : "";
    try {
        if (tag == kGeneticsSchema) return build_genetics(genetics_from_json(j));
        return problem_from_json(j);
    } catch (const ModelConditionError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

std::string solution_to_csv(const SolutionProfile& s) {
    const std::size_t n = s.size();
    std::string out = "x";
    for (std::size_t i = 0; i < n; ++i) out += ",p" + std::to_string(i + 1);
    for (std::size_t i = 0; i < n; ++i) out += ",dp" + std::to_string(i + 1);
    out += "\n";
    for (std::size_t k = 0; k < s.points(); ++k) {
        out += format_double(s.mesh()[k]);
        for (std::size_t i = 0; i < n; ++i) out += "," + format_double(s.value(k, i));
        for (std::size_t i = 0; i < n; ++i) out += "," + format_double(s.derivative(k, i));
        out += "\n";
    }
    return out;
}

SolutionProfile solution_from_csv(const std::string& text, const ProblemSpec& spec, const std::string& source) {
    const std::size_t n = spec.size();
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> mesh, values, derivs;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 || line.empty()) continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p <= end) {
            const char* comma = std::find(p, end, ',');
            double v = 0.0;
            const auto res = std::from_chars(p, comma, v);
            if (res.ec != std::errc() || res.ptr != comma) {
                throw InvalidInput(source + ":" + std::to_string(lineno) + ": malformed number");
            }
            row.push_back(v);
            p = comma + 1;
        }
        if (row.size() != 1 + 2 * n) {
            throw InvalidInput(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(1 + 2 * n) +
                               " fields, got " + std::to_string(row.size()));
        }
        mesh.push_back(row[0]);
        values.insert(values.end(), row.begin() + 1, row.begin() + 1 + static_cast<std::ptrdiff_t>(n));
        derivs.insert(derivs.end(), row.begin() + 1 + static_cast<std::ptrdiff_t>(n), row.end());
    }
    if (mesh.size() < 2) throw InvalidInput(source + ": need at least two rows");
    if (!std::is_sorted(mesh.begin(), mesh.end()) || std::adjacent_find(mesh.begin(), mesh.end()) != mesh.end()) {
        throw InvalidInput(source + ": mesh must be strictly increasing");
    }
    const CompiledSystem system(spec);
    return make_profile(spec, system, std::move(mesh), std::move(values), std::move(derivs));
}

Json admissibility_to_json(const AdmissibilityReport& report) {
    Json j;
    j["admissible"] = report.admissible();
    Json eqs = Json::array();
    for (const EquationAdmissibility& e : report.equations) {
        eqs.push_back({{"admissible", e.admissible()},
                       {"alpha_positive_on_I", e.positive_on_I},
                       {"integral_alpha_on_I", e.integral_alpha_on_I},
                       {"integral_beta", e.integral_beta},
                       {"f_superlinear", e.f_superlinear},
                       {"violations", e.violations}});
    }
    j["equations"] = eqs;
    j["violations"] = report.violations();
    return j;
}

Json thresholds_to_json(const Thresholds& th) {
    return {{"r", th.r}, {"rho", th.rho}, {"R", th.R}, {"const_tol", th.const_tol}, {"gap_tol", th.gap_tol}};
}

Json measurements_to_json(const std::vector<ComponentMeasurement>& ms) {
    Json a = Json::array();
    for (const ComponentMeasurement& m : ms) {
        a.push_back({{"max_on_I", m.max_on_I}, {"sup_norm", m.sup_norm}, {"distance_to_one", m.distance_to_one}});
    }
    return a;
}

Json census_to_json(const CensusReport& c) {
    Json j;
    j["thresholds"] = thresholds_to_json(c.thresholds);
    j["counts"] = {{"total", c.total},
                   {"trivial", c.trivial},
                   {"semitrivial", c.semitrivial},
                   {"fully_nontrivial", c.fully_nontrivial},
                   {"unclassifiable", c.unclassifiable},
                   {"not_all_constant", c.not_all_constant}};
    j["label_counts"] = c.label_counts;
    j["unpopulated_fully_nontrivial"] = c.unpopulated_fully_nontrivial;
    j["unpopulated"] = c.unpopulated;
    j["realizable"] = {{"not_all_constant", c.realizable_not_all_constant},
                       {"fully_nontrivial", c.realizable_fully_nontrivial}};
    Json entries = Json::array();
    for (const Classification& e : c.entries) {
        Json je;
        if (e.label) {
            std::vector<std::string> comps;
            for (ComponentClass cc : e.label->components) comps.emplace_back(to_string(cc));
            je["label"] = comps;
            je["aggregate"] = to_string(e.label->aggregate);
        } else {
            je["label"] = nullptr;
            je["aggregate"] = "unclassifiable";
            je["reason"] = e.reason;
        }
        je["measurements"] = measurements_to_json(e.measurements);
        entries.push_back(je);
    }
    j["solutions"] = entries;
    return j;
}

Json verification_to_json(const VerificationReport& report) {
    Json j;
    j["passed"] = report.passed();
    Json checks = Json::array();
    for (const CheckResult& c : report.checks) {
        checks.push_back({{"check", c.name}, {"measured", c.measured}, {"tolerance", c.tolerance}, {"passed", c.passed}});
    }
    j["checks"] = checks;
    return j;
}

Json lambda_star_to_json(const LambdaStarEstimate& est) {
    return {{"equation", est.k + 1},        {"rho", est.rho},
            {"epsilon", est.epsilon},       {"eta", est.eta},
            {"alpha_integral", est.alpha_integral}, {"lambda_star", est.lambda_star}};
}

std::string branch_to_csv(const Branch& branch, const ProblemSpec& base, const Thresholds& th) {
    const std::size_t n = base.size();
    std::string out = to_string(branch.parameter);
    for (std::size_t i = 0; i < n; ++i) out += ",c" + std::to_string(i + 1);
    out += ",residual,label\n";
    for (const BranchPoint& pt : branch.points) {
        out += format_double(pt.parameter);
        for (std::size_t i = 0; i < n; ++i) out += "," + format_double(pt.solution.initial_value[i]);
        out += "," + format_double(pt.solution.residual_sup) + ",";
        const Classification c = classify(pt.solution, base, th);
        out += c.label ? "\"" + c.label->to_string() + "\"" : std::string("unclassifiable");
        out += "\n";
    }
    return out;
}

}  // namespace clines
