#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clines/compiled_system.hpp"
#include "clines/problem.hpp"

namespace clines {

struct IvpState {
    double x = 0.0;
    std::vector<double> y;
};

/// First-order system y' = F(x, y) with optional breakpoints where F is
/// only continuous; steps never straddle a breakpoint.
class OdeSystem {
public:
    virtual ~OdeSystem() = default;
    virtual std::size_t dimension() const = 0;
    virtual void evaluate(double x, std::span<const double> y, std::span<double> dydx) const = 0;
    virtual std::span<const double> breakpoints() const { return {}; }
};

/// First-order form of p'' + h(x, p) = 0, state ordered (p_1..p_N, p_1'..p_N').
class ExtendedSystem final : public OdeSystem {
public:
    explicit ExtendedSystem(const CompiledSystem& system) : system_(system) {}

    std::size_t dimension() const override { return 2 * system_.size(); }
    void evaluate(double x, std::span<const double> y, std::span<double> dydx) const override;
    std::span<const double> breakpoints() const override { return system_.breakpoints(); }

private:
    const CompiledSystem& system_;
};

struct IntegrationOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    double initial_step = 0.0;  // 0 selects the step automatically
    double max_step = 0.0;      // 0 means unbounded
    std::size_t max_steps = 200000;
    bool dense = true;  // keep every accepted step and its interpolant
};

/// Accepted steps of a Dormand-Prince 5(4) integration with the 4th-order
/// continuous extension on each step.
class Trajectory {
public:
    std::size_t dimension() const noexcept { return dim_; }
    std::size_t points() const noexcept { return xs_.size(); }
    std::span<const double> positions() const noexcept { return xs_; }
    std::span<const double> state(std::size_t k) const { return {ys_.data() + k * dim_, dim_}; }
    IvpState front() const;
    IvpState back() const;
    bool has_dense_output() const noexcept { return !dense_.empty(); }

    void evaluate(double x, std::span<double> out) const;
    std::vector<double> evaluate(double x) const;

    std::size_t rejected_steps() const noexcept { return rejected_; }
    std::size_t rhs_evaluations() const noexcept { return evaluations_; }

private:
    friend Trajectory integrate(const OdeSystem&, const IvpState&, double, const IntegrationOptions&);

    std::size_t dim_ = 0;
    std::vector<double> xs_;
    std::vector<double> ys_;
    std::vector<double> dense_;  // 5 * dim_ coefficients per step
    std::size_t rejected_ = 0;
    std::size_t evaluations_ = 0;
};

Trajectory integrate(const OdeSystem& system, const IvpState& start, double x_end,
                     const IntegrationOptions& options = {});

/// Integrates the extended system of `spec` from `start` to `x_end`.
Trajectory integrate(const ProblemSpec& spec, const IvpState& start, double x_end,
                     double rel_tol = 1e-10, double abs_tol = 1e-10);

}  // namespace clines
