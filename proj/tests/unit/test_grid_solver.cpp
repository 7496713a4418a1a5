#include <doctest.h>

#include <cmath>
#include <random>

#include "clines/error.hpp"
#include "clines/grid_solver.hpp"
#include "clines/shooting.hpp"
#include "support/fixtures.hpp"

using namespace clines;

namespace {

/// w = 1 - 3x: no interior kinks, positive on [0, 1/3].
ProblemSpec linear_weight() {
    Equation e{WeightFunction({{CouplingPolynomial::constant(0), SpatialProfile({0.0, 1.0}, {1.0, -2.0})}}),
               Nonlinearity::dominance(), 100.0, {0.0, 1.0 / 3.0}, {}};
    return {fixture::unit, {e}, 0.0};
}

/// Step weight whose kinks sit on every dyadic grid with M >= 64.
ProblemSpec dyadic_step() {
    ProblemSpec spec = fixture::baseline();
    spec.equations[0].weight = WeightFunction(
        {{CouplingPolynomial::constant(0), SpatialProfile::step(fixture::unit, 0.375, 0.625, 1.0, -1.0, 1.0 / 64.0)}});
    spec.equations[0].positivity = {0.375, 0.625};
    return spec;
}

ProblemSpec zero_weight() {
    ProblemSpec spec = fixture::baseline();
    spec.equations[0].weight =
        WeightFunction({{CouplingPolynomial::constant(0), SpatialProfile::constant(fixture::unit, 0.0)}});
    return spec;
}

double mean(std::span<const double> v) {
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t k = 1; k + 1 < v.size(); ++k) s += v[k];
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("grids need at least eight intervals") {
    CHECK_THROWS_AS(Grid::uniform(fixture::unit, 4), InvalidInput);
    const Grid g = Grid::uniform(fixture::unit, 8);
    CHECK(g.points() == 9);
    CHECK(g.spacing() == 0.125);
    CHECK(g.node(8) == 1.0);
}

TEST_CASE("fd residual vanishes at the constants 0 and 1") {
    const ProblemSpec spec = fixture::genetics();
    const Grid g = Grid::uniform(spec.domain, 64);
    for (double c : {0.0, 1.0}) {
        const std::vector<double> P(2 * g.points(), c);
        for (double r : fd_residual(spec, g, P)) CHECK(r == 0.0);
    }
}

TEST_CASE("fd residual of the sampled shooting solution decays like dx^2") {
    const ProblemSpec spec = linear_weight();
    const MultistartResult res = multistart(spec);
    std::size_t nontrivial = 0;
    for (const SolutionProfile& s : res.solutions) {
        if (s.sup_norm(0) == 0.0 || s.sup_distance_to_one(0) == 0.0) continue;
        ++nontrivial;
        double prev = 0.0;
        for (std::size_t M : {64u, 128u, 256u, 512u}) {
            const Grid g = Grid::uniform(spec.domain, M);
            const double r = sup_norm(fd_residual(spec, g, sample_on_grid(s, g)));
            if (prev > 0.0) {
                const double ratio = prev / r;
                CHECK_MESSAGE((ratio >= 3.5 && ratio <= 4.5), "M = " << M << " ratio " << ratio);
            }
            prev = r;
        }
    }
    CHECK(nontrivial >= 2);
}

TEST_CASE("fd Newton from zero stays at zero") {
    const ProblemSpec spec = fixture::baseline();
    const Grid g = Grid::uniform(spec.domain, 64);
    const FdOutcome o = fd_newton(spec, g, std::vector<double>(g.points(), 0.0));
    REQUIRE(o.ok());
    CHECK(sup_norm(o.values) == 0.0);
}

TEST_CASE("fd Newton from a perturbed shooting solution reconverges to it") {
    const ProblemSpec spec = dyadic_step();
    const Grid g = Grid::uniform(spec.domain, 65536);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> noise(-1e-3, 1e-3);
    for (double c : {0.0615998760007, 0.13728051015}) {
        const NewtonOutcome shot = newton_shoot(spec, std::vector<double>{c});
        REQUIRE(shot.ok());
        const std::vector<double> exact = sample_on_grid(*shot.solution, g);
        std::vector<double> start = exact;
        for (double& v : start) v += noise(rng);
        const FdOutcome o = fd_newton(spec, g, start);
        REQUIRE(o.ok());
        double dist = 0.0;
        for (std::size_t k = 0; k < exact.size(); ++k) dist = std::max(dist, std::abs(o.values[k] - exact[k]));
        CHECK(dist <= 1e-8);
    }
}

TEST_CASE("fd Newton on a vanishing weight reports a singular Jacobian") {
    const ProblemSpec spec = zero_weight();
    const Grid g = Grid::uniform(spec.domain, 32);
    std::vector<double> P(g.points());
    for (std::size_t k = 0; k < P.size(); ++k) P[k] = 0.3 + 0.1 * std::cos(3.14159 * g.node(k));
    const FdOutcome o = fd_newton(spec, g, P);
    CHECK(o.status == FdStatus::singular);
    CHECK_FALSE(o.message.empty());
}

TEST_CASE("relaxation from zero stays at zero") {
    const ProblemSpec spec = fixture::baseline();
    const Grid g = Grid::uniform(spec.domain, 64);
    const RelaxOutcome o = relax(spec, g, std::vector<double>(g.points(), 0.0), 1e-3, 1.0, 1e-8);
    CHECK(o.status == RelaxStatus::steady);
    CHECK(sup_norm(o.values) == 0.0);
}

TEST_CASE("relaxation from 0.5 on the baseline reaches a steady state") {
    const ProblemSpec spec = fixture::baseline();
    const Grid g = Grid::uniform(spec.domain, 128);
    const RelaxOutcome o = relax(spec, g, std::vector<double>(g.points(), 0.5), 1e-4, 200.0, 1e-8);
    REQUIRE(o.status == RelaxStatus::steady);
    CHECK(sup_norm(fd_residual(spec, g, o.values)) <= 1e-6);
    for (double v : o.values) {
        CHECK(v >= -1e-9);
        CHECK(v <= 1.0 + 1e-9);
    }
}

TEST_CASE("relaxation without selection converges to the mean of the start") {
    const ProblemSpec spec = zero_weight();
    const Grid g = Grid::uniform(spec.domain, 64);
    std::vector<double> P(g.points());
    for (std::size_t k = 0; k < P.size(); ++k) P[k] = 0.2 + 0.6 * g.node(k) * g.node(k);
    const double m0 = mean(P);
    const RelaxOutcome o = relax(spec, g, P, 1e-3, 100.0, 1e-10);
    REQUIRE(o.status == RelaxStatus::steady);
    for (double v : o.values) CHECK(v == doctest::Approx(m0).epsilon(1e-9));
    CHECK(grid_mean(g, o.values, 1, 0) == doctest::Approx(m0).epsilon(1e-12));
}

TEST_CASE("pure diffusion conserves every component mean to 1e-12 per step") {
    const ProblemSpec spec = fixture::genetics();
    const Grid g = Grid::uniform(spec.domain, 64);
    std::vector<double> P(2 * g.points());
    for (std::size_t k = 0; k < g.points(); ++k) {
        P[2 * k] = 0.5 + 0.4 * std::sin(7.0 * g.node(k));
        P[2 * k + 1] = g.node(k);
    }
    RelaxOptions opt;
    opt.reaction = false;
    double m0 = grid_mean(g, P, 2, 0), m1 = grid_mean(g, P, 2, 1);
    for (int step = 0; step < 50; ++step) {
        opt.t_end = opt.dt;
        const RelaxOutcome o = relax(spec, g, P, opt);
        REQUIRE(o.steps == 1);
        P = o.values;
        CHECK(std::abs(grid_mean(g, P, 2, 0) - m0) <= 1e-12);
        CHECK(std::abs(grid_mean(g, P, 2, 1) - m1) <= 1e-12);
        m0 = grid_mean(g, P, 2, 0);
        m1 = grid_mean(g, P, 2, 1);
    }
}

TEST_CASE("profile from grid values carries the solver metadata") {
    const ProblemSpec spec = fixture::baseline();
    const Grid g = Grid::uniform(spec.domain, 64);
    const SolutionProfile s = profile_from_grid(spec, g, std::vector<double>(g.points(), 1.0));
    CHECK(s.points() == g.points());
    CHECK(s.residual_sup == 0.0);
    CHECK(s.initial_value == std::vector<double>{1.0});
}
