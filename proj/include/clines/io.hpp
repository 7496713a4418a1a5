#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clines/classification.hpp"
#include "clines/continuation.hpp"
#include "clines/genetics.hpp"
#include "clines/problem.hpp"
#include "clines/solution.hpp"

namespace clines {

using Json = nlohmann::ordered_json;

inline constexpr const char* kProblemSchema = "clines.problem/1";
inline constexpr const char* kGeneticsSchema = "clines.genetics/1";
inline constexpr const char* kRunSchema = "clines.run/1";
inline constexpr const char* kArchiveSchema = "clines.archive/1";

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

Json read_json_file(const std::filesystem::path& path);
std::string dump_json(const Json& j);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

Json profile_to_json(const SpatialProfile& p);
/// Accepts {"nodes", "values"}, {"constant"} or {"step": {a, b, inside,
/// outside, ramp}}; `where` prefixes error messages.
SpatialProfile profile_from_json(const Json& j, Interval domain, const std::string& where);

Json problem_to_json(const ProblemSpec& spec);
ProblemSpec problem_from_json(const Json& j);

struct GeneticsInput {
    FitnessSet fitness;
    /// 2^N phenotype profiles by mask when the file lists them directly.
    std::optional<std::vector<SpatialProfile>> phenotypes;
    GeneticsOptions options;
};

GeneticsInput genetics_from_json(const Json& j);
ProblemSpec build_genetics(const GeneticsInput& input);

/// Problem or genetics file, told apart by its schema tag.
ProblemSpec load_problem(const std::filesystem::path& path);

std::string solution_to_csv(const SolutionProfile& s);
SolutionProfile solution_from_csv(const std::string& text, const ProblemSpec& spec, const std::string& source);

Json admissibility_to_json(const AdmissibilityReport& report);
Json thresholds_to_json(const Thresholds& th);
Json measurements_to_json(const std::vector<ComponentMeasurement>& ms);
Json census_to_json(const CensusReport& census);
Json verification_to_json(const VerificationReport& report);
Json lambda_star_to_json(const LambdaStarEstimate& est);

/// Trace of a branch: parameter, initial values, residual, quoted label.
std::string branch_to_csv(const Branch& branch, const ProblemSpec& base, const Thresholds& th);

}  // namespace clines
