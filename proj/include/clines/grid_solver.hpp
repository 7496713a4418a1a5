#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clines/compiled_system.hpp"
#include "clines/problem.hpp"
#include "clines/solution.hpp"

namespace clines {

/// M + 1 uniform nodes on the problem interval.
struct Grid {
    Interval domain;
    std::size_t intervals = 0;

    static Grid uniform(Interval domain, std::size_t intervals);

    std::size_t points() const noexcept { return intervals + 1; }
    double spacing() const noexcept { return domain.length() / static_cast<double>(intervals); }
    double node(std::size_t j) const noexcept;
    std::vector<double> nodes() const;
};

/// Spatial coefficients replaced by their hat-function averages at the grid
/// nodes. Unchanged at nodes whose two cells contain no coefficient kink;
/// elsewhere it keeps the scheme second order.
ProblemSpec grid_projected(const ProblemSpec& spec, const Grid& grid);

/// Second-difference residual, node-major like SolutionProfile values.
/// Boundary rows use mirrored ghost nodes; reaction terms use the
/// grid-projected coefficients.
std::vector<double> fd_residual(const ProblemSpec& spec, const Grid& grid, std::span<const double> values);
double sup_norm(std::span<const double> v);

/// Node values of a profile sampled on the grid.
std::vector<double> sample_on_grid(const SolutionProfile& solution, const Grid& grid);

/// Profile on the grid nodes with central-difference slopes (zero at the ends).
SolutionProfile profile_from_grid(const ProblemSpec& spec, const Grid& grid, std::vector<double> values);

enum class FdStatus { converged, singular, diverged, max_iterations };
const char* to_string(FdStatus status);

struct FdOutcome {
    FdStatus status = FdStatus::max_iterations;
    std::optional<SolutionProfile> solution;
    std::vector<double> values;
    double residual = 0.0;   // sup of fd_residual at `values`
    double tolerance = 0.0;  // tol, raised to the rounding floor 8 eps max(1, |P|) / dx^2
    int iterations = 0;
    std::string message;

    bool ok() const noexcept { return status == FdStatus::converged; }
};

/// Damped Newton on fd_residual with the block-tridiagonal Jacobian.
FdOutcome fd_newton(const ProblemSpec& spec, const Grid& grid, std::span<const double> initial, double tol = 1e-8,
                    int max_iter = 50);

struct RelaxOptions {
    double dt = 1e-3;
    double t_end = 100.0;
    double steady_tol = 1e-8;
    bool reaction = true;
};

enum class RelaxStatus { steady, timeout, blow_up };
const char* to_string(RelaxStatus status);

struct RelaxOutcome {
    RelaxStatus status = RelaxStatus::timeout;
    std::optional<SolutionProfile> solution;
    std::vector<double> values;
    double time = 0.0;
    std::size_t steps = 0;
    double rate = 0.0;  // last sup |P^{n+1} - P^n| / dt
};

/// Implicit diffusion, explicit reaction time stepping of p_t = p'' + h(x, p).
RelaxOutcome relax(const ProblemSpec& spec, const Grid& grid, std::span<const double> initial,
                   const RelaxOptions& options);
RelaxOutcome relax(const ProblemSpec& spec, const Grid& grid, std::span<const double> initial, double dt,
                   double t_end, double steady_tol);

/// Trapezoid-rule mean of component i.
double grid_mean(const Grid& grid, std::span<const double> values, std::size_t components, std::size_t i);

}  // namespace clines
