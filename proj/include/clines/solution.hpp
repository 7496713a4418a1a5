#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clines/compiled_system.hpp"
#include "clines/ivp.hpp"
#include "clines/problem.hpp"

namespace clines {

/// A discretized solution of the Neumann system: values, first and second
/// derivatives of every component at the mesh nodes, plus the metadata the
/// solvers attach to it.
///
/// Node data is stored node-major: entry (k, i) lives at k * size() + i.
class SolutionProfile {
public:
    SolutionProfile() = default;
    SolutionProfile(std::size_t components, std::vector<double> mesh, std::vector<double> values,
                    std::vector<double> derivatives, std::vector<double> curvatures);

    std::size_t size() const noexcept { return n_; }
    std::size_t points() const noexcept { return mesh_.size(); }
    bool empty() const noexcept { return mesh_.empty(); }
    std::span<const double> mesh() const noexcept { return mesh_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> derivatives() const noexcept { return derivatives_; }
    std::span<const double> curvatures() const noexcept { return curvatures_; }

    double value(std::size_t k, std::size_t i) const { return values_[k * n_ + i]; }
    double derivative(std::size_t k, std::size_t i) const { return derivatives_[k * n_ + i]; }
    double curvature(std::size_t k, std::size_t i) const { return curvatures_[k * n_ + i]; }
    std::vector<double> component(std::size_t i) const;

    /// Quintic Hermite interpolation of (p, p', p'') between nodes.
    void evaluate(double x, std::span<double> p, std::span<double> dp) const;
    std::vector<double> evaluate(double x) const;

    /// Extremes from the cubic Hermite interpolant of (p, p'), located exactly.
    double max_on(std::size_t i, double a, double b) const;
    double min_on(std::size_t i, double a, double b) const;
    double sup_norm(std::size_t i) const;
    double sup_distance_to_one(std::size_t i) const;
    double max_spacing() const;

    /// Mesh with every interval split into `factor` equal parts, node data
    /// filled in from the quintic interpolant.
    SolutionProfile refined(std::size_t factor) const;

    std::vector<double> lambdas;
    double mu = 0.0;
    double residual_sup = 0.0;
    std::vector<double> neumann_left;
    std::vector<double> neumann_right;
    std::vector<double> initial_value;

private:
    std::size_t locate(double x) const;

    std::size_t n_ = 0;
    std::vector<double> mesh_;
    std::vector<double> values_;
    std::vector<double> derivatives_;
    std::vector<double> curvatures_;
};

/// Per-component sup over mesh intervals of |mean of (p'' + h(x, p))|, where
/// the mean of p'' is the exact difference quotient of p' and the mean of h
/// is a Gauss-Legendre quadrature along the quintic interpolant.
std::vector<double> interval_residuals(const CompiledSystem& system, const SolutionProfile& solution);
double residual_sup(const CompiledSystem& system, const SolutionProfile& solution);

/// Integral over the interval of h_i(x, p(x)) for every component.
std::vector<double> rhs_integrals(const CompiledSystem& system, const SolutionProfile& solution);

/// Builds a profile from node values and first derivatives; curvatures are
/// set to -h(x, p) and all metadata is recomputed.
SolutionProfile make_profile(const ProblemSpec& spec, const CompiledSystem& system,
                             std::vector<double> mesh, std::vector<double> values,
                             std::vector<double> derivatives);

/// Profile at the accepted steps of a trajectory of the extended system.
SolutionProfile make_profile(const ProblemSpec& spec, const CompiledSystem& system,
                             const Trajectory& trajectory);

/// Recomputes residual_sup, Neumann residuals, lambdas, mu and initial_value.
void refresh_metadata(SolutionProfile& solution, const ProblemSpec& spec, const CompiledSystem& system);

}  // namespace clines
