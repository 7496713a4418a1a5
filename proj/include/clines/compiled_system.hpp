#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clines/problem.hpp"

namespace clines {

/// Flattened form of a ProblemSpec for the inner loops of the solvers.
///
/// All spatial profiles are linear on each segment between consecutive
/// breakpoints, so each profile is stored as (intercept, slope) per segment.
class CompiledSystem {
public:
    explicit CompiledSystem(const ProblemSpec& spec);

    std::size_t size() const noexcept { return n_; }
    Interval domain() const noexcept { return domain_; }
    std::span<const double> breakpoints() const noexcept { return breakpoints_; }
    std::size_t segment(double x) const;

    /// h(x, xi) + mu v(x); xi is any point of R^N.
    void rhs(double x, std::span<const double> xi, std::span<double> out) const;

    /// Row-major N x N Jacobian of rhs with respect to xi. On the kinks
    /// xi_i = 0 and xi_i = 1 the diagonal takes the truncated branch's -1.
    void jacobian(double x, std::span<const double> xi, std::span<double> jac) const;

    /// lambda_i w_i(x, clamp(xi)) for component i.
    double scaled_weight(std::size_t i, double x, std::span<const double> xi) const;

private:
    struct Term {
        std::vector<double> coefficients;
        std::vector<int> exponents;  // monomials x N, entry for component i is 0
        std::vector<double> intercept;
        std::vector<double> slope;
    };
    struct CompiledEquation {
        std::vector<Term> terms;
        Nonlinearity f;
        double lambda = 1.0;
        std::vector<double> forcing_intercept;
        std::vector<double> forcing_slope;
    };

    double coupling(const Term& t, std::span<const double> xc) const;
    double coupling_partial(const Term& t, std::size_t m, std::span<const double> xc) const;

    std::size_t n_;
    Interval domain_;
    double mu_;
    std::vector<double> breakpoints_;
    std::vector<CompiledEquation> equations_;
};

}  // namespace clines
