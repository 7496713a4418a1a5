#include "clines/compiled_system.hpp"

#include <algorithm>

#include "clines/error.hpp"

namespace clines {

namespace {

void linearize(const SpatialProfile& p, std::span<const double> breaks, std::vector<double>& intercept,
               std::vector<double>& slope) {
    const std::size_t segments = breaks.size() - 1;
    intercept.resize(segments);
    slope.resize(segments);
    for (std::size_t k = 0; k < segments; ++k) {
        const double x0 = breaks[k], x1 = breaks[k + 1];
        const double v0 = p(x0), v1 = p(x1);
        slope[k] = (v1 - v0) / (x1 - x0);
        intercept[k] = v0 - slope[k] * x0;
    }
}

double int_power(double base, int exponent) {
    double r = 1.0;
    for (int k = 0; k < exponent; ++k) r *= base;
    return r;
}

}  // namespace

CompiledSystem::CompiledSystem(const ProblemSpec& spec)
    : n_(spec.size()), domain_(spec.domain), mu_(spec.mu) {
    spec.validate();
    std::vector<const SpatialProfile*> profiles;
    for (const Equation& e : spec.equations) {
        for (const WeightTerm& t : e.weight.terms()) profiles.push_back(&t.profile);
        if (!e.forcing.empty()) profiles.push_back(&e.forcing);
    }
    breakpoints_ = merge_nodes(profiles);
    breakpoints_.front() = domain_.lower;
    breakpoints_.back() = domain_.upper;

    for (std::size_t i = 0; i < n_; ++i) {
        const Equation& e = spec.equations[i];
        CompiledEquation ce;
        ce.f = e.nonlinearity;
        ce.lambda = e.lambda;
        for (const WeightTerm& wt : e.weight.terms()) {
            Term t;
            for (const Monomial& m : wt.coupling.terms()) {
                t.coefficients.push_back(m.coefficient);
                std::size_t j = 0;
                for (std::size_t c = 0; c < n_; ++c) {
                    t.exponents.push_back(c == i ? 0 : m.exponents[j++]);
                }
            }
            linearize(wt.profile, breakpoints_, t.intercept, t.slope);
            ce.terms.push_back(std::move(t));
        }
        if (!e.forcing.empty()) {
            linearize(e.forcing, breakpoints_, ce.forcing_intercept, ce.forcing_slope);
        }
        equations_.push_back(std::move(ce));
    }
}

std::size_t CompiledSystem::segment(double x) const {
    auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, x);
    return static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
}

double CompiledSystem::coupling(const Term& t, std::span<const double> xc) const {
    double sum = 0.0;
    for (std::size_t m = 0; m < t.coefficients.size(); ++m) {
        double term = t.coefficients[m];
        const int* e = &t.exponents[m * n_];
        for (std::size_t c = 0; c < n_; ++c) term *= int_power(xc[c], e[c]);
        sum += term;
    }
    return sum;
}

double CompiledSystem::coupling_partial(const Term& t, std::size_t var, std::span<const double> xc) const {
    double sum = 0.0;
    for (std::size_t m = 0; m < t.coefficients.size(); ++m) {
        const int* e = &t.exponents[m * n_];
        if (e[var] == 0) continue;
        double term = t.coefficients[m] * e[var];
        for (std::size_t c = 0; c < n_; ++c) term *= int_power(xc[c], c == var ? e[c] - 1 : e[c]);
        sum += term;
    }
    return sum;
}

double CompiledSystem::scaled_weight(std::size_t i, double x, std::span<const double> xi) const {
    double xc[16];
    std::vector<double> heap;
    double* buf = xc;
    if (n_ > 16) {
        heap.resize(n_);
        buf = heap.data();
    }
    for (std::size_t c = 0; c < n_; ++c) buf[c] = std::clamp(xi[c], 0.0, 1.0);
    const std::size_t k = segment(x);
    const CompiledEquation& ce = equations_[i];
    double w = 0.0;
    for (const Term& t : ce.terms) w += coupling(t, {buf, n_}) * (t.intercept[k] + t.slope[k] * x);
    return ce.lambda * w;
}

void CompiledSystem::rhs(double x, std::span<const double> xi, std::span<double> out) const {
    double xc[16];
    std::vector<double> heap;
    double* buf = xc;
    if (n_ > 16) {
        heap.resize(n_);
        buf = heap.data();
    }
    for (std::size_t c = 0; c < n_; ++c) buf[c] = std::clamp(xi[c], 0.0, 1.0);
    const std::span<const double> clamped(buf, n_);
    const std::size_t k = segment(x);
    for (std::size_t i = 0; i < n_; ++i) {
        const CompiledEquation& ce = equations_[i];
        const double s = xi[i];
        double value;
        if (s <= 0.0) {
            value = -s;
        } else if (s >= 1.0) {
            value = 1.0 - s;
        } else {
            double w = 0.0;
            for (const Term& t : ce.terms) w += coupling(t, clamped) * (t.intercept[k] + t.slope[k] * x);
            value = ce.lambda * w * ce.f(s);
        }
        if (mu_ != 0.0 && !ce.forcing_slope.empty()) {
            value += mu_ * (ce.forcing_intercept[k] + ce.forcing_slope[k] * x);
        }
        out[i] = value;
    }
}

void CompiledSystem::jacobian(double x, std::span<const double> xi, std::span<double> jac) const {
    std::vector<double> xc(n_);
    for (std::size_t c = 0; c < n_; ++c) xc[c] = std::clamp(xi[c], 0.0, 1.0);
    const std::size_t k = segment(x);
    std::fill(jac.begin(), jac.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        const CompiledEquation& ce = equations_[i];
        const double s = xi[i];
        if (s <= 0.0 || s >= 1.0) {
            jac[i * n_ + i] = -1.0;
            continue;
        }
        double w = 0.0;
        for (const Term& t : ce.terms) w += coupling(t, xc) * (t.intercept[k] + t.slope[k] * x);
        jac[i * n_ + i] = ce.lambda * w * ce.f.derivative(s);
        const double fs = ce.f(s);
        for (std::size_t m = 0; m < n_; ++m) {
            if (m == i || xi[m] < 0.0 || xi[m] > 1.0) continue;
            double dw = 0.0;
            for (const Term& t : ce.terms) {
                dw += coupling_partial(t, m, xc) * (t.intercept[k] + t.slope[k] * x);
            }
            jac[i * n_ + m] = ce.lambda * dw * fs;
        }
    }
}

}  // namespace clines
