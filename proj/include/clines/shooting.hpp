#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clines/compiled_system.hpp"
#include "clines/ivp.hpp"
#include "clines/problem.hpp"
#include "clines/solution.hpp"

namespace clines {

struct ShootResult {
    Trajectory trajectory;
    std::vector<double> residual;  // p'(right end) per component
};

/// Integrates from (left end, p = c, p' = 0) to the right end.
ShootResult shoot(const CompiledSystem& system, std::span<const double> c, double tol, bool dense = true);
ShootResult shoot(const ProblemSpec& spec, std::span<const double> c, double tol);

struct NewtonOptions {
    double tol = 1e-9;
    int max_iter = 40;
    double fd_step = 1e-7;
    double max_condition = 1e14;
    /// Components within this distance of 0 or 1 after convergence are
    /// tried at the exact constant.
    double snap_tol = 1e-4;
};

enum class NewtonStatus {
    converged,
    max_iterations,
    singular_jacobian,
    diverged,
    no_descent,
    integration_failed,
    rejected,  // converged in c but the profile failed the residual or box check
};

const char* to_string(NewtonStatus status);

struct NewtonOutcome {
    NewtonStatus status = NewtonStatus::max_iterations;
    std::optional<SolutionProfile> solution;
    std::vector<double> c;         // last iterate
    std::vector<double> residual;  // undeflated residual at c
    int iterations = 0;
    /// Determinant of the undeflated shooting Jacobian at the last
    /// iterate, over the non-frozen components (1 if all are frozen).
    double jacobian_det = 1.0;
    std::string message;

    bool ok() const noexcept { return status == NewtonStatus::converged; }
};

/// Damped, optionally deflated Newton iteration on the shooting residual.
NewtonOutcome newton_shoot(const ProblemSpec& spec, std::span<const double> c0, const NewtonOptions& options = {},
                           std::span<const std::vector<double>> deflation = {});

/// Final high-resolution profile for an initial value c.
SolutionProfile solution_from_initial_value(const ProblemSpec& spec, const CompiledSystem& system,
                                            std::span<const double> c);

struct MultistartOptions {
    int grid_per_axis = 64;
    double tol = 1e-9;
    double dedup_tol = 1e-6;
    int max_iter = 40;
    unsigned jobs = 1;
    /// After the grid starts, screen the residual on a lattice (the grid
    /// plus geometric points near 0 and 1 on every free axis) and bisect
    /// cells where every component changes sign, polishing with Newton.
    bool bracketing = true;
    int max_bisection_depth = 30;
    std::size_t max_cells = 20000;
};

struct StartFailure {
    std::vector<double> start;
    NewtonStatus status;
    std::string message;
};

struct MultistartResult {
    std::vector<SolutionProfile> solutions;  // sorted by initial value
    bool degenerate = false;                 // every weight vanishes identically
    std::size_t starts = 0;
    std::size_t bracketed_cells = 0;
    std::vector<StartFailure> failures;
};

MultistartResult multistart(const ProblemSpec& spec, const MultistartOptions& options = {});

/// Sorts profiles lexicographically by initial value and drops those within
/// dedup_tol (sup norm) of an earlier one.
std::vector<SolutionProfile> deduplicate(std::vector<SolutionProfile> solutions, double dedup_tol);

}  // namespace clines
