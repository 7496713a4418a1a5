#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "clines/profile.hpp"

namespace clines {

struct Monomial {
    double coefficient = 0.0;
    std::vector<int> exponents;  // one entry per coupled component

    bool operator==(const Monomial&) const = default;
};

/// Polynomial in the N-1 "other" components of the system.
///
/// For N = 1 the arity is zero and the polynomial is the sum of its
/// coefficients.
class CouplingPolynomial {
public:
    CouplingPolynomial(std::size_t arity, std::vector<Monomial> terms);

    static CouplingPolynomial constant(std::size_t arity, double value = 1.0);

    std::size_t arity() const noexcept { return arity_; }
    const std::vector<Monomial>& terms() const noexcept { return terms_; }

    double operator()(std::span<const double> xi) const;
    double partial(std::size_t variable, std::span<const double> xi) const;
    int degree_in(std::size_t variable) const;

    bool operator==(const CouplingPolynomial&) const = default;

private:
    std::size_t arity_;
    std::vector<Monomial> terms_;
};

struct WeightTerm {
    CouplingPolynomial coupling;
    SpatialProfile profile;

    bool operator==(const WeightTerm&) const = default;
};

/// w(x, xi) = sum_j c_j(xi) a_j(x), a separable sum of coupling polynomials
/// times piecewise-linear spatial profiles.
class WeightFunction {
public:
    explicit WeightFunction(std::vector<WeightTerm> terms);

    std::size_t arity() const noexcept { return terms_.front().coupling.arity(); }
    Interval domain() const { return terms_.front().profile.domain(); }
    const std::vector<WeightTerm>& terms() const noexcept { return terms_; }

    /// Unchecked evaluation; xi is used as given.
    double operator()(double x, std::span<const double> xi) const;
    double partial(std::size_t variable, double x, std::span<const double> xi) const;

    std::vector<double> breakpoints() const;
    bool is_identically_zero() const;

    bool operator==(const WeightFunction&) const = default;

private:
    std::vector<WeightTerm> terms_;
};

/// f(s) = scale * s^a * (1 - s)^b on [0, 1].
struct Nonlinearity {
    double scale = 1.0;
    double a = 2.0;
    double b = 1.0;

    Nonlinearity() = default;
    Nonlinearity(double scale, double a, double b);

    /// f(s) = 2 s^2 (1 - s): complete dominance in a diploid population.
    static Nonlinearity dominance() { return {2.0, 2.0, 1.0}; }

    double operator()(double s) const;
    double derivative(double s) const;
    double argmax() const { return a / (a + b); }
    double max_value() const { return (*this)(argmax()); }
    /// Minimum over [lo, hi] subset of [0, 1] (f is unimodal).
    double min_on(double lo, double hi) const;
    bool superlinear_at_zero() const noexcept { return a >= 2.0; }

    bool operator==(const Nonlinearity&) const = default;
};

struct Equation {
    WeightFunction weight;
    Nonlinearity nonlinearity;
    double lambda = 1.0;
    Interval positivity;    // I_i = [sigma_i, tau_i]
    SpatialProfile forcing;  // v_i(x); empty means zero

    bool operator==(const Equation&) const = default;
};

/// The coupled Neumann system p_i'' + lambda_i w_i(x, p^i) f_i(p_i) + mu v_i(x) = 0.
struct ProblemSpec {
    Interval domain;
    std::vector<Equation> equations;
    double mu = 0.0;

    std::size_t size() const noexcept { return equations.size(); }
    std::vector<double> lambdas() const;

    /// Throws InvalidInput naming the offending field.
    void validate() const;

    ProblemSpec with_lambdas(std::span<const double> lambdas) const;
    ProblemSpec with_uniform_lambda(double lambda) const;
    ProblemSpec with_lambda_scale(double scale) const;
    ProblemSpec with_forcing(double mu, std::vector<SpatialProfile> forcing) const;

    bool operator==(const ProblemSpec&) const = default;
};

struct EquationAdmissibility {
    SpatialProfile alpha;
    SpatialProfile beta;
    double integral_beta = 0.0;
    double integral_alpha_on_I = 0.0;
    bool positive_on_I = false;
    bool alpha_nonzero_on_I = false;
    bool f_superlinear = false;
    std::vector<std::string> violations;

    bool admissible() const noexcept { return violations.empty(); }
};

struct AdmissibilityReport {
    std::vector<EquationAdmissibility> equations;

    bool admissible() const noexcept;
    std::vector<std::string> violations() const;
};

struct Envelopes {
    SpatialProfile alpha;
    SpatialProfile beta;
};

/// w(x, xi) with validation of the position and of xi in [0,1]^{N-1}.
double evaluate_weight(const WeightFunction& w, double x, std::span<const double> xi);

/// Pointwise min / max of w over a tensor sample of [0,1]^{N-1} containing
/// the hypercube corners, taken at every breakpoint of w.
Envelopes weight_envelopes(const WeightFunction& w, int resolution);

AdmissibilityReport check_admissibility(const ProblemSpec& spec, int resolution = 9);

/// Truncated right-hand side h(x, xi) (+ mu v(x)). Coupling arguments are
/// clamped into [0, 1] before w is evaluated.
std::vector<double> extended_rhs(const ProblemSpec& spec, double x, std::span<const double> xi);

/// Components of xi other than `skip`, clamped into [0, 1].
void clamped_coupling(std::span<const double> xi, std::size_t skip, std::span<double> out);

}  // namespace clines
