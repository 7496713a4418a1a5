#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "clines/problem.hpp"
#include "clines/shooting.hpp"
#include "clines/solution.hpp"

namespace clines {

/// lambda_scale multiplies every lambda_i; theta is the same homotopy read
/// on (0, 1]; mu switches on the forcing term mu v(x).
enum class ContinuationParameter { lambda_scale, theta, mu };
const char* to_string(ContinuationParameter parameter);
ContinuationParameter parse_parameter(const std::string& name);

enum class BranchTermination { converged_at_end, fold_detected, newton_failure };
const char* to_string(BranchTermination termination);

struct BranchPoint {
    double parameter = 0.0;
    SolutionProfile solution;
    double jacobian_det = 1.0;
};

struct Branch {
    ContinuationParameter parameter = ContinuationParameter::lambda_scale;
    std::vector<BranchPoint> points;
    BranchTermination termination = BranchTermination::converged_at_end;
    std::string message;
};

struct ContinuationOptions {
    NewtonOptions newton;
    /// Largest accepted change of the initial value between neighbours.
    double max_jump = 0.02;
    /// Forcing profiles for the mu family; empty selects the indicator of
    /// the first component (v_1 = 1, v_i = 0 otherwise).
    std::vector<SpatialProfile> forcing;
};

/// The member of the family at parameter value `value`.
ProblemSpec family_member(const ProblemSpec& base, ContinuationParameter parameter, double value,
                          const std::vector<SpatialProfile>& forcing = {});

/// Natural-parameter continuation along strictly monotone `values`, with
/// one bisection of a failed step before termination.
Branch continue_branch(const ProblemSpec& base, const SolutionProfile& seed, ContinuationParameter parameter,
                       std::span<const double> values, const ContinuationOptions& options = {});

struct LambdaStarEstimate {
    std::size_t k = 0;
    double rho = 0.0;
    double epsilon = 0.0;
    double eta = 0.0;
    double alpha_integral = 0.0;
    double lambda_star = 0.0;
};

/// Threshold above which no solution has max over I_k of p_k equal to rho,
/// for a fixed margin epsilon.
LambdaStarEstimate lambda_star_at(const ProblemSpec& spec, std::size_t k, double rho, double epsilon,
                                  int resolution = 9);

/// Tightest threshold over epsilon_grid log-spaced margins in (0, |I_k| / 2).
LambdaStarEstimate lambda_star_estimate(const ProblemSpec& spec, std::size_t k, double rho, int epsilon_grid = 64,
                                        int resolution = 9);

/// mu_0 = max_i lambda_i || max(|alpha_i|, |beta_i|) ||_1 max f_i / |Omega|.
double mu_bound(const ProblemSpec& spec, int resolution = 9);

}  // namespace clines
