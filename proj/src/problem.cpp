#include "clines/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "clines/error.hpp"

namespace clines {

namespace {

double int_power(double base, int exponent) {
    double result = 1.0;
    for (int k = 0; k < exponent; ++k) result *= base;
    return result;
}

std::string equation_tag(std::size_t i) { return "equations[" + std::to_string(i) + "]"; }

}  // namespace

// ---------------------------------------------------------------------------
// CouplingPolynomial

CouplingPolynomial::CouplingPolynomial(std::size_t arity, std::vector<Monomial> terms)
    : arity_(arity), terms_(std::move(terms)) {
    for (const Monomial& m : terms_) {
        if (m.exponents.size() != arity_) {
            throw InvalidInput("coupling polynomial: monomial has " +
                               std::to_string(m.exponents.size()) + " exponents, expected " +
                               std::to_string(arity_));
        }
        if (!std::isfinite(m.coefficient)) {
            throw InvalidInput("coupling polynomial: non-finite coefficient");
        }
        for (int e : m.exponents) {
            if (e < 0) throw InvalidInput("coupling polynomial: negative exponent");
        }
    }
}

CouplingPolynomial CouplingPolynomial::constant(std::size_t arity, double value) {
    return CouplingPolynomial(arity, {Monomial{value, std::vector<int>(arity, 0)}});
}

double CouplingPolynomial::operator()(std::span<const double> xi) const {
    double sum = 0.0;
    for (const Monomial& m : terms_) {
        double term = m.coefficient;
        for (std::size_t j = 0; j < arity_; ++j) term *= int_power(xi[j], m.exponents[j]);
        sum += term;
    }
    return sum;
}

double CouplingPolynomial::partial(std::size_t variable, std::span<const double> xi) const {
    double sum = 0.0;
    for (const Monomial& m : terms_) {
        const int e = m.exponents[variable];
        if (e == 0) continue;
        double term = m.coefficient * e;
        for (std::size_t j = 0; j < arity_; ++j) {
            term *= int_power(xi[j], j == variable ? e - 1 : m.exponents[j]);
        }
        sum += term;
    }
    return sum;
}

int CouplingPolynomial::degree_in(std::size_t variable) const {
    int degree = 0;
    for (const Monomial& m : terms_) degree = std::max(degree, m.exponents[variable]);
    return degree;
}

// ---------------------------------------------------------------------------
// WeightFunction

WeightFunction::WeightFunction(std::vector<WeightTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw InvalidInput("weight function needs at least one term");
    const std::size_t arity = terms_.front().coupling.arity();
    const Interval dom = terms_.front().profile.domain();
    for (const WeightTerm& t : terms_) {
        if (t.coupling.arity() != arity) {
            throw InvalidInput("weight function: coupling polynomials differ in arity");
        }
        if (t.profile.empty() || !(t.profile.domain() == dom)) {
            throw InvalidInput("weight function: spatial profiles must share the interval");
        }
    }
}

double WeightFunction::operator()(double x, std::span<const double> xi) const {
    double sum = 0.0;
    for (const WeightTerm& t : terms_) sum += t.coupling(xi) * t.profile(x);
    return sum;
}

double WeightFunction::partial(std::size_t variable, double x, std::span<const double> xi) const {
    double sum = 0.0;
    for (const WeightTerm& t : terms_) sum += t.coupling.partial(variable, xi) * t.profile(x);
    return sum;
}

std::vector<double> WeightFunction::breakpoints() const {
    std::vector<const SpatialProfile*> profiles;
    for (const WeightTerm& t : terms_) profiles.push_back(&t.profile);
    std::vector<double> nodes = merge_nodes(profiles);
    nodes.front() = domain().lower;
    nodes.back() = domain().upper;
    return nodes;
}

bool WeightFunction::is_identically_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const WeightTerm& t) {
        const bool zero_coupling = std::all_of(t.coupling.terms().begin(), t.coupling.terms().end(),
                                               [](const Monomial& m) { return m.coefficient == 0.0; });
        return zero_coupling || t.profile.is_zero();
    });
}

// ---------------------------------------------------------------------------
// Nonlinearity

Nonlinearity::Nonlinearity(double scale_, double a_, double b_) : scale(scale_), a(a_), b(b_) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidInput("nonlinearity: scale must be positive");
    if (!(a >= 1.0) || !std::isfinite(a)) throw InvalidInput("nonlinearity: exponent a must be >= 1");
    if (!(b >= 1.0) || !std::isfinite(b)) throw InvalidInput("nonlinearity: exponent b must be >= 1");
}

namespace {

// s^e, with repeated multiplication for small integral exponents.
double real_power(double s, double e) {
    if (e >= 0.0 && e <= 8.0 && e == std::floor(e)) return int_power(s, static_cast<int>(e));
    return std::pow(s, e);
}

}  // namespace

double Nonlinearity::operator()(double s) const {
    return scale * real_power(s, a) * real_power(1.0 - s, b);
}

double Nonlinearity::derivative(double s) const {
    const double sa1 = real_power(s, a - 1.0);
    const double sb1 = real_power(1.0 - s, b - 1.0);
    return scale * sa1 * sb1 * (a * (1.0 - s) - b * s);
}

double Nonlinearity::min_on(double lo, double hi) const {
    return std::min((*this)(lo), (*this)(hi));
}

// ---------------------------------------------------------------------------
// ProblemSpec

std::vector<double> ProblemSpec::lambdas() const {
    std::vector<double> out;
    for (const Equation& e : equations) out.push_back(e.lambda);
    return out;
}

void ProblemSpec::validate() const {
    if (!std::isfinite(domain.lower) || !std::isfinite(domain.upper) || !(domain.lower < domain.upper)) {
        throw InvalidInput("interval: lower bound must be below upper bound");
    }
    if (equations.empty()) throw InvalidInput("equations: at least one equation required");
    if (!std::isfinite(mu)) throw InvalidInput("mu: must be finite");
    const std::size_t n = equations.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Equation& e = equations[i];
        const std::string tag = equation_tag(i);
        if (e.weight.arity() != n - 1) {
            throw InvalidInput(tag + ".weight: coupling arity " + std::to_string(e.weight.arity()) +
                               " does not match N-1 = " + std::to_string(n - 1));
        }
        if (!(e.weight.domain() == domain)) {
            throw InvalidInput(tag + ".weight: profiles must span the problem interval");
        }
        if (!(e.lambda > 0.0) || !std::isfinite(e.lambda)) {
            throw InvalidInput(tag + ".lambda: must be positive and finite");
        }
        const Interval& I = e.positivity;
        if (!(I.lower < I.upper) || I.lower < domain.lower || I.upper > domain.upper) {
            throw InvalidInput(tag + ".positivity_interval: need lower < upper inside the interval");
        }
        if (!e.forcing.empty() && !(e.forcing.domain() == domain)) {
            throw InvalidInput(tag + ".forcing: profile must span the problem interval");
        }
    }
}

ProblemSpec ProblemSpec::with_lambdas(std::span<const double> values) const {
    if (values.size() != equations.size()) throw InvalidInput("with_lambdas: size mismatch");
    ProblemSpec out = *this;
    for (std::size_t i = 0; i < values.size(); ++i) out.equations[i].lambda = values[i];
    return out;
}

ProblemSpec ProblemSpec::with_uniform_lambda(double lambda) const {
    ProblemSpec out = *this;
    for (Equation& e : out.equations) e.lambda = lambda;
    return out;
}

ProblemSpec ProblemSpec::with_lambda_scale(double scale) const {
    ProblemSpec out = *this;
    for (Equation& e : out.equations) e.lambda *= scale;
    return out;
}

ProblemSpec ProblemSpec::with_forcing(double mu_value, std::vector<SpatialProfile> forcing) const {
    if (forcing.size() != equations.size()) throw InvalidInput("with_forcing: size mismatch");
    ProblemSpec out = *this;
    out.mu = mu_value;
    for (std::size_t i = 0; i < forcing.size(); ++i) out.equations[i].forcing = std::move(forcing[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Admissibility

bool AdmissibilityReport::admissible() const noexcept {
    return std::all_of(equations.begin(), equations.end(),
                       [](const EquationAdmissibility& e) { return e.admissible(); });
}

std::vector<std::string> AdmissibilityReport::violations() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < equations.size(); ++i) {
        for (const std::string& v : equations[i].violations) out.push_back(equation_tag(i) + ": " + v);
    }
    return out;
}

double evaluate_weight(const WeightFunction& w, double x, std::span<const double> xi) {
    if (xi.size() != w.arity()) {
        throw InvalidInput("evaluate_weight: expected " + std::to_string(w.arity()) +
                           " coupling arguments, got " + std::to_string(xi.size()));
    }
    for (double v : xi) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("evaluate_weight: coupling argument outside [0,1]");
    }
    const Interval dom = w.domain();
    if (!(x >= dom.lower && x <= dom.upper)) {
        std::ostringstream msg;
        msg << "evaluate_weight: position " << x << " outside [" << dom.lower << ", " << dom.upper << "]";
        throw DomainError(msg.str());
    }
    return w(x, xi);
}

Envelopes weight_envelopes(const WeightFunction& w, int resolution) {
    if (resolution < 2) throw InvalidInput("weight_envelopes: resolution must be >= 2");
    const std::size_t d = w.arity();
    const std::vector<double> nodes = w.breakpoints();

    std::size_t samples = 1;
    for (std::size_t j = 0; j < d; ++j) samples *= static_cast<std::size_t>(resolution);

    std::vector<double> lo(nodes.size(), std::numeric_limits<double>::infinity());
    std::vector<double> hi(nodes.size(), -std::numeric_limits<double>::infinity());
    std::vector<double> xi(d);
    const double denom = static_cast<double>(resolution - 1);
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t code = s;
        for (std::size_t j = 0; j < d; ++j) {
            const auto k = static_cast<double>(code % static_cast<std::size_t>(resolution));
            code /= static_cast<std::size_t>(resolution);
            xi[j] = k / denom;
        }
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double v = w(nodes[k], xi);
            lo[k] = std::min(lo[k], v);
            hi[k] = std::max(hi[k], v);
        }
    }
    return {SpatialProfile(nodes, std::move(lo)), SpatialProfile(nodes, std::move(hi))};
}

AdmissibilityReport check_admissibility(const ProblemSpec& spec, int resolution) {
    spec.validate();
    AdmissibilityReport report;
    for (const Equation& e : spec.equations) {
        EquationAdmissibility eq;
        Envelopes env = weight_envelopes(e.weight, resolution);
        eq.alpha = std::move(env.alpha);
        eq.beta = std::move(env.beta);

        const Interval I = e.positivity;
        double min_alpha_on_I = std::min(eq.alpha(I.lower), eq.alpha(I.upper));
        const auto nodes = eq.alpha.nodes();
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (I.contains(nodes[k])) min_alpha_on_I = std::min(min_alpha_on_I, eq.alpha.values()[k]);
        }
        const double alpha_scale =
            std::max({1.0, std::abs(eq.alpha.min_value()), std::abs(eq.alpha.max_value())});
        eq.positive_on_I = min_alpha_on_I >= -1e-12 * alpha_scale;
        eq.integral_alpha_on_I = eq.alpha.integral(I.lower, I.upper);
        eq.alpha_nonzero_on_I = eq.integral_alpha_on_I > 1e-12;
        eq.integral_beta = eq.beta.integral();
        eq.f_superlinear = e.nonlinearity.superlinear_at_zero();

        std::ostringstream msg;
        if (!eq.positive_on_I) {
            msg << "alpha envelope negative on the positivity interval (min " << min_alpha_on_I << ")";
            eq.violations.push_back(msg.str());
            msg.str("");
        }
        if (!eq.alpha_nonzero_on_I) {
            msg << "alpha envelope vanishes on the positivity interval (integral "
                << eq.integral_alpha_on_I << ")";
            eq.violations.push_back(msg.str());
            msg.str("");
        }
        if (!(eq.integral_beta < 0.0)) {
            msg << "integral of beta envelope is " << eq.integral_beta << " >= 0";
            eq.violations.push_back(msg.str());
            msg.str("");
        }
        if (!eq.f_superlinear) {
            msg << "nonlinearity exponent a = " << e.nonlinearity.a << " < 2, so f'(0) != 0";
            eq.violations.push_back(msg.str());
        }
        report.equations.push_back(std::move(eq));
    }
    return report;
}

void clamped_coupling(std::span<const double> xi, std::size_t skip, std::span<double> out) {
    std::size_t j = 0;
    for (std::size_t m = 0; m < xi.size(); ++m) {
        if (m == skip) continue;
        out[j++] = std::clamp(xi[m], 0.0, 1.0);
    }
}

std::vector<double> extended_rhs(const ProblemSpec& spec, double x, std::span<const double> xi) {
    if (xi.size() != spec.size()) throw InvalidInput("extended_rhs: state has wrong dimension");
    if (!spec.domain.contains(x)) {
        std::ostringstream msg;
        msg << "extended_rhs: position " << x << " outside the interval";
        throw DomainError(msg.str());
    }
    const std::size_t n = spec.size();
    std::vector<double> out(n);
    std::vector<double> others(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Equation& e = spec.equations[i];
        const double s = xi[i];
        if (s <= 0.0) {
            out[i] = -s;
        } else if (s >= 1.0) {
            out[i] = 1.0 - s;
        } else {
            clamped_coupling(xi, i, others);
            out[i] = e.lambda * e.weight(x, others) * e.nonlinearity(s);
        }
        if (spec.mu != 0.0 && !e.forcing.empty()) out[i] += spec.mu * e.forcing(x);
    }
    return out;
}

}  // namespace clines
