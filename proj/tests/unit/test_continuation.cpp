#include <doctest.h>

#include <cmath>

#include "clines/classification.hpp"
#include "clines/continuation.hpp"
#include "clines/error.hpp"
#include "clines/shooting.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace clines;

namespace {

ProblemSpec scaled_weight(double factor) {
    ProblemSpec spec = fixture::baseline();
    spec.equations[0].weight = WeightFunction(
        {{CouplingPolynomial::constant(0), fixture::baseline_step().scaled(factor)}});
    return spec;
}

ProblemSpec constant_weight(double lambda) {
    ProblemSpec spec = fixture::baseline(lambda);
    spec.equations[0].weight =
        WeightFunction({{CouplingPolynomial::constant(0), SpatialProfile::constant(fixture::unit, 1.0)}});
    return spec;
}

std::vector<double> range(double from, double to, int count) {
    std::vector<double> v;
    for (int k = 0; k < count; ++k) v.push_back(from + (to - from) * k / (count - 1));
    return v;
}

}  // namespace

TEST_CASE("lambda star at rho 0.5 and epsilon 0.05 on the baseline") {
    const LambdaStarEstimate e = lambda_star_at(fixture::baseline(), 0, 0.5, 0.05);
    // eta = f(0.05 * 0.5 / 0.2) = f(0.125); alpha = 1 on [0.45, 0.55].
    CHECK(e.eta == doctest::Approx(0.02734375).epsilon(1e-14));
    CHECK(e.alpha_integral == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(e.lambda_star == doctest::Approx(1.0 / (0.05 * 0.02734375 * 0.1)).epsilon(1e-12));
    CHECK(std::abs(e.lambda_star - 7314.3) / 7314.3 <= 1e-3);
}

TEST_CASE("doubling alpha halves lambda star") {
    const LambdaStarEstimate a = lambda_star_at(scaled_weight(1.0), 0, 0.5, 0.05);
    const LambdaStarEstimate b = lambda_star_at(scaled_weight(2.0), 0, 0.5, 0.05);
    CHECK(b.lambda_star == doctest::Approx(0.5 * a.lambda_star).epsilon(1e-14));
    const LambdaStarEstimate ea = lambda_star_estimate(scaled_weight(1.0), 0, 0.5);
    const LambdaStarEstimate eb = lambda_star_estimate(scaled_weight(2.0), 0, 0.5);
    CHECK(eb.lambda_star == doctest::Approx(0.5 * ea.lambda_star).epsilon(1e-14));
}

TEST_CASE("lambda star estimate takes the tightest margin") {
    const ProblemSpec spec = fixture::baseline();
    const LambdaStarEstimate best = lambda_star_estimate(spec, 0, 0.5);
    CHECK(best.epsilon > 0.0);
    CHECK(best.epsilon < 0.1);
    CHECK(best.lambda_star == doctest::Approx(lambda_star_at(spec, 0, 0.5, best.epsilon).lambda_star).epsilon(1e-14));
    for (double eps : {0.01, 0.02, 0.05, 0.08}) CHECK(best.lambda_star <= lambda_star_at(spec, 0, 0.5, eps).lambda_star);
    CHECK(best.lambda_star == doctest::Approx(2 * 0.5 / (best.epsilon * best.eta * best.alpha_integral)).epsilon(1e-14));
}

TEST_CASE("lambda star grows as rho decreases below 0.1") {
    const ProblemSpec spec = fixture::baseline();
    double prev = 0.0;
    for (double rho : {0.1, 0.05, 0.02, 0.01, 0.005, 0.001}) {
        const double v = lambda_star_estimate(spec, 0, rho).lambda_star;
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("a pointwise larger alpha never raises lambda star") {
    ProblemSpec stronger = fixture::baseline();
    stronger.equations[0].weight = WeightFunction(
        {{CouplingPolynomial::constant(0), SpatialProfile::step(fixture::unit, 0.4, 0.6, 1.5, -1.0, 0.01)}});
    for (double rho : {0.2, 0.5, 0.8}) {
        CHECK(lambda_star_estimate(stronger, 0, rho).lambda_star <=
              lambda_star_estimate(fixture::baseline(), 0, rho).lambda_star);
    }
}

TEST_CASE("lambda star errors") {
    CHECK_THROWS_AS(lambda_star_at(fixture::baseline(), 0, 1.5, 0.05), InvalidInput);
    CHECK_THROWS_AS(lambda_star_at(fixture::baseline(), 0, 0.5, 0.2), InvalidInput);
    ProblemSpec negative = scaled_weight(-1.0);
    CHECK_THROWS(lambda_star_estimate(negative, 0, 0.5));
}

TEST_CASE("mu bound: constant weight, doubling lambda, asymmetric lambdas") {
    CHECK(mu_bound(constant_weight(100.0)) == doctest::Approx(100.0 * 8.0 / 27.0).epsilon(1e-14));
    CHECK(std::abs(mu_bound(constant_weight(100.0)) - 29.63) <= 5e-3);
    CHECK(mu_bound(constant_weight(200.0)) == doctest::Approx(2.0 * mu_bound(constant_weight(100.0))).epsilon(1e-14));
    ProblemSpec two = fixture::decoupled();
    two.equations[1].lambda = 300.0;
    ProblemSpec one = fixture::baseline(300.0);
    CHECK(mu_bound(two) == doctest::Approx(mu_bound(one)).epsilon(1e-14));
}

TEST_CASE("family members") {
    const ProblemSpec base = fixture::genetics(200.0);
    CHECK(family_member(base, ContinuationParameter::theta, 0.5, {}).equations[1].lambda == 100.0);
    CHECK(family_member(base, ContinuationParameter::lambda_scale, 2.0, {}).equations[0].lambda == 400.0);
    CHECK_THROWS_AS(family_member(base, ContinuationParameter::theta, 0.0, {}), InvalidInput);
    CHECK_THROWS_AS(family_member(base, ContinuationParameter::theta, 1.5, {}), InvalidInput);
    const ProblemSpec m = family_member(base, ContinuationParameter::mu, 3.0, {});
    CHECK(m.mu == 3.0);
    CHECK(m.equations[0].forcing(0.3) == 1.0);
    CHECK((m.equations[1].forcing.empty() || m.equations[1].forcing.is_zero()));
    CHECK(parse_parameter("theta") == ContinuationParameter::theta);
    CHECK_THROWS_AS(parse_parameter("kappa"), InvalidInput);
}

TEST_CASE("theta path of a single point returns the seed") {
    const ProblemSpec spec = fixture::baseline();
    const MultistartResult res = multistart(spec);
    const SolutionProfile& seed = res.solutions[1];
    const std::vector<double> values{1.0};
    const Branch b = continue_branch(spec, seed, ContinuationParameter::theta, values);
    CHECK(b.termination == BranchTermination::converged_at_end);
    REQUIRE(b.points.size() == 1);
    CHECK(std::abs(b.points[0].solution.initial_value[0] - seed.initial_value[0]) <= 1e-9);
}

TEST_CASE("an invalid seed is rejected") {
    const ProblemSpec spec = fixture::baseline();
    const MultistartResult res = multistart(spec);
    const std::vector<double> values{0.5, 0.6};
    CHECK_THROWS_AS(continue_branch(spec, res.solutions[1], ContinuationParameter::lambda_scale, values), InvalidInput);
    const std::vector<double> unordered{1.0, 0.9, 0.95};
    CHECK_THROWS_AS(continue_branch(spec, res.solutions[1], ContinuationParameter::lambda_scale, unordered),
                    InvalidInput);
}

TEST_CASE("small solutions collapse on the way down in lambda") {
    const ProblemSpec spec = fixture::baseline(200.0);
    const MultistartResult res = multistart(spec);
    REQUIRE(res.solutions.size() >= 3);
    const SolutionProfile& small = res.solutions[1];
    const Branch b = continue_branch(spec, small, ContinuationParameter::lambda_scale, range(1.0, 0.05, 96));
    CHECK(b.termination != BranchTermination::converged_at_end);
    const double last = b.points.back().parameter * 200.0;
    CHECK(last > 10.0);
    for (std::size_t k = 0; k < b.points.size(); k += 10) {
        const double lambda = b.points[k].parameter * 200.0;
        const std::vector<double> roots = oracle::baseline_roots(lambda);
        const double c = b.points[k].solution.initial_value[0];
        const bool matched = std::any_of(roots.begin(), roots.end(), [c](double r) { return std::abs(r - c) <= 1e-8; });
        CHECK_MESSAGE(matched, "no oracle root near " << c << " at lambda " << lambda);
    }
    CHECK(oracle::baseline_roots(last - 2.0).empty());
}

TEST_CASE("mu branches end below the bound and every point verifies") {
    const ProblemSpec spec = fixture::baseline(100.0);
    const MultistartResult res = multistart(spec);
    const double bound = mu_bound(spec);
    const std::vector<double> mus = range(0.0, 1.5 * bound, 451);
    for (std::size_t idx : {std::size_t{1}, std::size_t{2}}) {
        const Branch b = continue_branch(spec, res.solutions[idx], ContinuationParameter::mu, mus);
        CHECK(b.termination != BranchTermination::converged_at_end);
        CHECK(b.points.back().parameter <= bound);
        for (const BranchPoint& p : b.points) {
            const ProblemSpec member = family_member(spec, ContinuationParameter::mu, p.parameter, {});
            CHECK(verify(p.solution, member).passed());
            CHECK(p.solution.mu == p.parameter);
        }
    }
}
