#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clines/problem.hpp"
#include "clines/solution.hpp"

namespace clines {

struct Thresholds {
    double r = 0.01;
    double rho = 0.5;
    double R = 0.999;
    double const_tol = 1e-6;
    /// Half-width of the band around rho left unclassified.
    double gap_tol = 1e-4;

    void validate() const;
};

enum class ComponentClass { zero, one, small_on_I, large_on_I };
enum class AggregateClass { trivial, semitrivial, fully_nontrivial };

const char* to_string(ComponentClass c);
const char* to_string(AggregateClass c);

struct ComponentMeasurement {
    double max_on_I = 0.0;  // max over I_i of |p_i|
    double sup_norm = 0.0;
    double distance_to_one = 0.0;
};

struct ClassLabel {
    std::vector<ComponentClass> components;
    AggregateClass aggregate = AggregateClass::trivial;

    std::string to_string() const;
    bool operator==(const ClassLabel&) const = default;
};

struct Classification {
    std::optional<ClassLabel> label;
    std::vector<ComponentMeasurement> measurements;
    std::string reason;  // set when unclassifiable

    bool classified() const noexcept { return label.has_value(); }
};

std::vector<ComponentMeasurement> measure(const SolutionProfile& solution, const ProblemSpec& spec);

Classification classify(const SolutionProfile& solution, const ProblemSpec& spec, const Thresholds& th);

struct CensusReport {
    Thresholds thresholds;
    std::size_t total = 0;
    std::size_t trivial = 0;
    /// At least one constant and at least one nonconstant component.
    std::size_t semitrivial = 0;
    std::size_t fully_nontrivial = 0;
    std::size_t unclassifiable = 0;
    /// Not every component constant; the count promised as 4^N - 2^N.
    std::size_t not_all_constant = 0;
    std::vector<Classification> entries;
    std::map<std::string, std::size_t> label_counts;
    std::vector<std::string> unpopulated_fully_nontrivial;  // of the 2^N vectors
    std::vector<std::string> unpopulated;                   // of the 4^N vectors
    /// Label vectors in the product of the per-component label sets that
    /// are not all-constant.
    std::size_t realizable_not_all_constant = 0;
    std::size_t realizable_fully_nontrivial = 0;
};

CensusReport census(std::span<const SolutionProfile> solutions, const ProblemSpec& spec, const Thresholds& th);

/// r = half the smallest nontrivial max over I, R = midway between the
/// largest nontrivial sup norm and 1, rho = middle of the widest gap of the
/// pooled max-over-I values. Throws DomainError without solutions or gap.
Thresholds auto_thresholds(std::span<const SolutionProfile> solutions, const ProblemSpec& spec,
                           double const_tol = 1e-6);

struct VerificationTolerances {
    double residual = 1e-7;
    double box = 1e-5;
    double neumann = 1e-9;
    /// Absent: (1 + |Omega|) (residual_sup + max_spacing^2).
    std::optional<double> integral;
    double concavity = 1e-7;

    static VerificationTolerances uniform(double tol) { return {tol, tol, tol, tol, tol}; }
};

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct VerificationReport {
    std::vector<CheckResult> checks;

    bool passed() const noexcept;
    std::vector<std::string> failures() const;
};

/// Recomputes every measurement from the profile; the stored metadata is
/// not trusted.
VerificationReport verify(const SolutionProfile& solution, const ProblemSpec& spec,
                          const VerificationTolerances& tol = {});

}  // namespace clines
