#include "clines/classification.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "clines/compiled_system.hpp"
#include "clines/error.hpp"

namespace clines {

namespace {

bool is_constant(ComponentClass c) { return c == ComponentClass::zero || c == ComponentClass::one; }

AggregateClass aggregate_of(const std::vector<ComponentClass>& cs) {
    const auto constants = static_cast<std::size_t>(std::count_if(cs.begin(), cs.end(), is_constant));
    if (constants == cs.size()) return AggregateClass::trivial;
    if (constants == 0) return AggregateClass::fully_nontrivial;
    return AggregateClass::semitrivial;
}

std::string label_string(const std::vector<ComponentClass>& cs) {
    std::string s = "(";
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i > 0) s += ",";
        s += to_string(cs[i]);
    }
    return s + ")";
}

// Every label vector over `alphabet`, in lexicographic order.
std::vector<std::vector<ComponentClass>> all_vectors(const std::vector<std::vector<ComponentClass>>& alphabets) {
    std::vector<std::vector<ComponentClass>> out{{}};
    for (const auto& alpha : alphabets) {
        std::vector<std::vector<ComponentClass>> next;
        for (const auto& prefix : out) {
            for (ComponentClass c : alpha) {
                next.push_back(prefix);
                next.back().push_back(c);
            }
        }
        out = std::move(next);
    }
    return out;
}

}  // namespace

void Thresholds::validate() const {
    if (!(0.0 < r && r < rho && rho < R && R < 1.0)) {
        throw InvalidInput("thresholds: need 0 < r < rho < R < 1");
    }
    if (!(const_tol > 0.0) || !(gap_tol >= 0.0)) throw InvalidInput("thresholds: tolerances must be positive");
}

const char* to_string(ComponentClass c) {
    switch (c) {
        case ComponentClass::zero: return "Zero";
        case ComponentClass::one: return "One";
        case ComponentClass::small_on_I: return "SmallOnI";
        case ComponentClass::large_on_I: return "LargeOnI";
    }
    return "unknown";
}

const char* to_string(AggregateClass c) {
    switch (c) {
        case AggregateClass::trivial: return "trivial";
        case AggregateClass::semitrivial: return "semitrivial";
        case AggregateClass::fully_nontrivial: return "fully-nontrivial";
    }
    return "unknown";
}

std::string ClassLabel::to_string() const { return label_string(components); }

std::vector<ComponentMeasurement> measure(const SolutionProfile& s, const ProblemSpec& spec) {
    if (s.size() != spec.size()) throw InvalidInput("classify: solution and problem differ in size");
    std::vector<ComponentMeasurement> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Interval I = spec.equations[i].positivity;
        out[i].max_on_I = std::max(std::abs(s.max_on(i, I.lower, I.upper)), std::abs(s.min_on(i, I.lower, I.upper)));
        out[i].sup_norm = s.sup_norm(i);
        out[i].distance_to_one = s.sup_distance_to_one(i);
    }
    return out;
}

Classification classify(const SolutionProfile& s, const ProblemSpec& spec, const Thresholds& th) {
    th.validate();
    Classification out;
    out.measurements = measure(s, spec);
    std::vector<ComponentClass> cs;
    std::ostringstream why;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const ComponentMeasurement& m = out.measurements[i];
        if (m.sup_norm <= th.const_tol) {
            cs.push_back(ComponentClass::zero);
        } else if (m.distance_to_one <= th.const_tol) {
            cs.push_back(ComponentClass::one);
        } else if (m.max_on_I >= th.R || m.sup_norm >= th.R) {
            why << "component " << i + 1 << ": max " << std::max(m.max_on_I, m.sup_norm) << " >= R";
            break;
        } else if (m.max_on_I <= th.r) {
            why << "component " << i + 1 << ": max over I " << m.max_on_I << " <= r";
            break;
        } else if (std::abs(m.max_on_I - th.rho) <= th.gap_tol) {
            why << "component " << i + 1 << ": max over I " << m.max_on_I << " within " << th.gap_tol << " of rho";
            break;
        } else {
            cs.push_back(m.max_on_I < th.rho ? ComponentClass::small_on_I : ComponentClass::large_on_I);
        }
    }
    if (cs.size() != s.size()) {
        out.reason = why.str();
        return out;
    }
    out.label = ClassLabel{cs, aggregate_of(cs)};
    return out;
}

CensusReport census(std::span<const SolutionProfile> solutions, const ProblemSpec& spec, const Thresholds& th) {
    th.validate();
    const std::size_t n = spec.size();
    CensusReport rep;
    rep.thresholds = th;
    rep.total = solutions.size();
    std::vector<std::set<ComponentClass>> seen(n);
    for (const SolutionProfile& s : solutions) {
        Classification c = classify(s, spec, th);
        if (!c.label) {
            ++rep.unclassifiable;
        } else {
            switch (c.label->aggregate) {
                case AggregateClass::trivial: ++rep.trivial; break;
                case AggregateClass::semitrivial: ++rep.semitrivial; break;
                case AggregateClass::fully_nontrivial: ++rep.fully_nontrivial; break;
            }
            if (c.label->aggregate != AggregateClass::trivial) ++rep.not_all_constant;
            ++rep.label_counts[c.label->to_string()];
            for (std::size_t i = 0; i < n; ++i) seen[i].insert(c.label->components[i]);
        }
        rep.entries.push_back(std::move(c));
    }

    const std::vector<ComponentClass> every{ComponentClass::zero, ComponentClass::one, ComponentClass::small_on_I,
                                            ComponentClass::large_on_I};
    for (const auto& v : all_vectors(std::vector<std::vector<ComponentClass>>(n, every))) {
        const std::string key = label_string(v);
        if (rep.label_counts.count(key)) continue;
        rep.unpopulated.push_back(key);
        if (aggregate_of(v) == AggregateClass::fully_nontrivial) rep.unpopulated_fully_nontrivial.push_back(key);
    }

    std::vector<std::vector<ComponentClass>> alphabets(n);
    for (std::size_t i = 0; i < n; ++i) alphabets[i].assign(seen[i].begin(), seen[i].end());
    for (const auto& v : all_vectors(alphabets)) {
        const AggregateClass a = aggregate_of(v);
        if (a != AggregateClass::trivial) ++rep.realizable_not_all_constant;
        if (a == AggregateClass::fully_nontrivial) ++rep.realizable_fully_nontrivial;
    }
    return rep;
}

Thresholds auto_thresholds(std::span<const SolutionProfile> solutions, const ProblemSpec& spec, double const_tol) {
    std::vector<double> maxima;
    double largest_sup = 0.0;
    for (const SolutionProfile& s : solutions) {
        for (const ComponentMeasurement& m : measure(s, spec)) {
            if (m.sup_norm <= const_tol || m.distance_to_one <= const_tol) continue;
            maxima.push_back(m.max_on_I);
            largest_sup = std::max(largest_sup, m.sup_norm);
        }
    }
    if (maxima.empty()) throw DomainError("auto_thresholds: no nontrivial solution components");
    std::sort(maxima.begin(), maxima.end());
    double gap = 0.0;
    double rho = 0.0;
    for (std::size_t k = 0; k + 1 < maxima.size(); ++k) {
        if (maxima[k + 1] - maxima[k] > gap) {
            gap = maxima[k + 1] - maxima[k];
            rho = 0.5 * (maxima[k] + maxima[k + 1]);
        }
    }
    if (!(gap >= 10.0 * const_tol)) {
        throw DomainError("auto_thresholds: no gap of at least 10 const_tol among the maxima over I");
    }
    Thresholds th;
    th.r = 0.5 * maxima.front();
    th.rho = rho;
    th.R = 0.5 * (largest_sup + 1.0);
    th.const_tol = const_tol;
    th.gap_tol = std::min(th.gap_tol, 0.25 * gap);
    th.validate();
    return th;
}

bool VerificationReport::passed() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<std::string> VerificationReport::failures() const {
    std::vector<std::string> out;
    for (const CheckResult& c : checks) {
        if (c.passed) continue;
        std::ostringstream msg;
        msg << c.name << ": measured " << c.measured << " > tolerance " << c.tolerance;
        out.push_back(msg.str());
    }
    return out;
}

VerificationReport verify(const SolutionProfile& s, const ProblemSpec& spec, const VerificationTolerances& tol) {
    const CompiledSystem system(spec);
    const std::size_t n = spec.size();
    if (s.size() != n) throw InvalidInput("verify: solution and problem differ in size");
    VerificationReport rep;
    auto add = [&](std::string name, double measured, double limit) {
        rep.checks.push_back({std::move(name), measured, limit, std::isfinite(measured) && measured <= limit});
    };

    const double res = residual_sup(system, s);
    add("residual", res, tol.residual);

    double box = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Interval d = spec.domain;
        box = std::max({box, -s.min_on(i, d.lower, d.upper), s.max_on(i, d.lower, d.upper) - 1.0});
    }
    add("box", box, tol.box);

    const std::size_t last = s.points() - 1;
    double neumann = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        neumann = std::max({neumann, std::abs(s.derivative(0, i)), std::abs(s.derivative(last, i))});
    }
    add("neumann", neumann, tol.neumann);

    const std::vector<double> integrals = rhs_integrals(system, s);
    double integral = 0.0;
    for (std::size_t i = 0; i < n; ++i) integral = std::max(integral, std::abs(integrals[i]) / spec.equations[i].lambda);
    const double h = s.max_spacing();
    add("integral", integral, tol.integral.value_or((1.0 + spec.domain.length()) * (res + h * h)));

    // Mean curvature over mesh intervals on which the weight is nonnegative
    // at both ends must not be positive.
    double convex = 0.0;
    std::vector<double> p0(n), p1(n);
    for (std::size_t k = 0; k < last; ++k) {
        const double x0 = s.mesh()[k], x1 = s.mesh()[k + 1];
        for (std::size_t i = 0; i < n; ++i) {
            p0[i] = s.value(k, i);
            p1[i] = s.value(k + 1, i);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (system.scaled_weight(i, x0, p0) < 0.0 || system.scaled_weight(i, x1, p1) < 0.0) continue;
            convex = std::max(convex, (s.derivative(k + 1, i) - s.derivative(k, i)) / (x1 - x0));
        }
    }
    add("concavity", convex, tol.concavity);
    return rep;
}

}  // namespace clines
