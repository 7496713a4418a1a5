#pragma once

#include <string>
#include <vector>

#include "clines/genetics.hpp"
#include "clines/problem.hpp"

namespace fixture {

inline constexpr clines::Interval unit{0.0, 1.0};

inline clines::SpatialProfile baseline_step() { return clines::SpatialProfile::step(unit, 0.4, 0.6, 1.0, -1.0, 0.01); }

inline clines::Equation equation(std::size_t arity, clines::SpatialProfile profile, double lambda) {
    clines::Equation e{clines::WeightFunction({{clines::CouplingPolynomial::constant(arity), std::move(profile)}}),
                       clines::Nonlinearity::dominance(), lambda, {0.4, 0.6}, {}};
    return e;
}

/// N = 1: weight +1 on [0.4, 0.6], -1 elsewhere, f = 2 s^2 (1 - s).
inline clines::ProblemSpec baseline(double lambda = 100.0) {
    return {unit, {equation(0, baseline_step(), lambda)}, 0.0};
}

/// Two copies of the baseline with zero-degree couplings.
inline clines::ProblemSpec decoupled(double lambda = 100.0) {
    return {unit, {equation(1, baseline_step(), lambda), equation(1, baseline_step(), lambda)}, 0.0};
}

/// Mirrored step fitnesses, favourable patch [0.4, 0.6] for both recessives.
inline clines::FitnessSet genetics_fitness() {
    clines::FitnessSet fit;
    fit.r_ab = clines::SpatialProfile::step(unit, 0.4, 0.6, 2.5, -1.5, 0.01);
    fit.r_Ab = clines::SpatialProfile::step(unit, 0.4, 0.6, 1.0, -1.0, 0.01);
    fit.r_aB = fit.r_Ab;
    fit.r_AB = clines::SpatialProfile::constant(unit, 0.0);
    fit.kappa = clines::SpatialProfile::constant(unit, 1.0);
    fit.kappa_min = 1.0;
    return fit;
}

inline clines::ProblemSpec genetics(double lambda = 200.0) {
    clines::GeneticsOptions opt;
    opt.lambdas = {lambda};
    return clines::build_two_locus(genetics_fitness(), opt);
}

inline clines::FitnessSet constant_fitness(double r_ab, double r_Ab, double r_aB, double r_AB) {
    clines::FitnessSet fit;
    fit.r_ab = clines::SpatialProfile::constant(unit, r_ab);
    fit.r_Ab = clines::SpatialProfile::constant(unit, r_Ab);
    fit.r_aB = clines::SpatialProfile::constant(unit, r_aB);
    fit.r_AB = clines::SpatialProfile::constant(unit, r_AB);
    fit.kappa = clines::SpatialProfile::constant(unit, 1.0);
    return fit;
}

/// Two-locus spec with the given positivity interval for both loci (needed
/// when the lower envelope is nowhere strictly positive).
inline clines::ProblemSpec two_locus_with(const clines::FitnessSet& fit, clines::Interval I = {0.4, 0.6}) {
    clines::GeneticsOptions opt;
    opt.positivity = {I, I};
    return clines::build_two_locus(fit, opt);
}

inline std::string data_file(const std::string& name) { return std::string(CLINES_DATA_DIR) + "/" + name; }

}  // namespace fixture
