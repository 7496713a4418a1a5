#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "clines/error.hpp"
#include "clines/problem.hpp"

namespace clines {

/// Phenotype fitnesses of the two-locus model with complete dominance at
/// both loci (a, b recessive) and the dispersal coefficient kappa.
struct FitnessSet {
    SpatialProfile r_ab;  // both recessives expressed
    SpatialProfile r_Ab;  // only b expressed
    SpatialProfile r_aB;  // only a expressed
    SpatialProfile r_AB;  // neither expressed
    SpatialProfile kappa;
    double kappa_min = 0.0;  // declared lower bound for kappa; 0 skips the check

    void validate() const;
};

struct OmegaDifferences {
    SpatialProfile omega_ab;  // r_ab - r_Ab
    SpatialProfile omega_aB;  // r_aB - r_AB
    SpatialProfile omega_ba;  // r_ab - r_aB
    SpatialProfile omega_bA;  // r_Ab - r_AB
};

OmegaDifferences omega_differences(const FitnessSet& fit);

struct GeneticsOptions {
    /// One value per locus, or a single value used for every locus.
    std::vector<double> lambdas{1.0};
    /// Explicit positivity intervals per locus; missing entries are detected
    /// from the lower envelope of the weight.
    std::vector<std::optional<Interval>> positivity;
    int resolution = 9;
};

/// Raised when no interval with a positive lower weight envelope exists.
class ModelConditionError : public Error {
public:
    ModelConditionError(const std::string& what, AdmissibilityReport report)
        : Error(what), report_(std::move(report)) {}
    const AdmissibilityReport& report() const noexcept { return report_; }

private:
    AdmissibilityReport report_;
};

/// Phenotype fitness profiles indexed by mask: bit i set means the recessive
/// phenotype is expressed at locus i. Returns the N-equation system with
/// f(s) = 2 s^2 (1 - s) for every locus.
ProblemSpec build_n_locus(std::span<const SpatialProfile> phenotypes, const SpatialProfile& kappa,
                          const GeneticsOptions& options = {}, double kappa_min = 0.0);

ProblemSpec build_two_locus(const FitnessSet& fit, const GeneticsOptions& options = {});

/// Phenotype list of a two-locus fitness set in mask order (AB, aB, Ab, ab).
std::vector<SpatialProfile> phenotypes_by_mask(const FitnessSet& fit);

/// Largest interval on which `alpha` is positive, ends extended to the exact
/// zero crossings; empty when alpha is nowhere above the relative margin.
std::optional<Interval> detect_positivity_interval(const SpatialProfile& alpha, double relative_margin = 1e-9);

double selection_term_a(const FitnessSet& fit, double x, double p, double q);
double selection_term_b(const FitnessSet& fit, double x, double p, double q);

/// Genotype frequencies; rows bb, Bb, BB and columns aa, Aa, AA.
std::array<std::array<double, 3>, 3> hardy_weinberg(double p, double q);

/// Allele-a selection term of the one-locus model with genotype fitnesses
/// r_aa, r_Aa, r_AA.
double one_locus_selection(const SpatialProfile& r_aa, const SpatialProfile& r_Aa, const SpatialProfile& r_AA,
                           double x, double p);

/// f(p) = p (1 - p) (1 + h - 2 h p).
double dominance_parameterized_f(double h, double p);

struct SelectionIdentityReport {
    std::size_t samples = 0;
    double max_error_a = 0.0;
    double max_error_b = 0.0;

    bool passed(double tol) const noexcept { return max_error_a <= tol && max_error_b <= tol; }
};

/// Compares kappa * w_p * f(p) with F_a (and the b counterpart) at random
/// (x, p, q) samples drawn from a seeded generator.
SelectionIdentityReport check_selection_identities(const FitnessSet& fit, const ProblemSpec& spec,
                                                   std::size_t samples, std::uint64_t seed);

}  // namespace clines
