#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "clines/classification.hpp"
#include "clines/problem.hpp"

namespace clines {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int inadmissible = 2;
inline constexpr int solver_failure = 3;
inline constexpr int verification_failure = 4;
inline constexpr int usage = 64;
}  // namespace exit_code

struct RunConfig {
    std::filesystem::path config;   // problem or genetics file
    std::filesystem::path out = ".";
    std::filesystem::path archive;  // verify: directory holding index.json
    unsigned jobs = 1;
    std::uint64_t seed = 0;
    std::optional<double> tol;      // solver tolerance for solve/sweep, uniform tolerance for verify
    int grid = 64;
    /// solve/check: lambda_1 (others scaled alike) or one value per equation.
    /// sweep: the lambda_1 grid.
    std::vector<double> lambdas;
    std::optional<double> rho;
    std::optional<Thresholds> thresholds;  // empty selects auto
    std::size_t samples = 10000;
};

/// `lambdas` with one entry rescales every lambda_i by lambdas[0] / lambda_1;
/// N entries replace them.
ProblemSpec apply_lambdas(const ProblemSpec& spec, const std::vector<double>& lambdas);

/// Archive directory name for a solve at the given lambda_1.
std::string archive_name(double lambda1);

/// Fallback thresholds used when automatic selection fails.
Thresholds fallback_thresholds();

int run_check(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_solve(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_sweep(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_genetics(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_verify(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace clines
