#include <doctest.h>

#include <cmath>
#include <random>

#include "clines/error.hpp"
#include "clines/profile.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace clines;

namespace {

// Midpoint rule on a fine uniform mesh.
double brute_integral(const std::function<double(double)>& g, double a, double b, int n = 400000) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += g(a + (k + 0.5) * h);
    return s * h;
}

}  // namespace

TEST_CASE("profile evaluation interpolates linearly between nodes") {
    const SpatialProfile p({0.0, 0.5, 1.0}, {0.0, 2.0, -1.0});
    CHECK(p(0.25) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p(0.75) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(p(0.0) == 0.0);
    CHECK(p(1.0) == -1.0);
}

TEST_CASE("profile evaluation outside the interval is an error") {
    const SpatialProfile p = SpatialProfile::constant(fixture::unit, 3.0);
    CHECK_THROWS_AS(p(-0.01), DomainError);
    CHECK_THROWS_AS(p(1.01), DomainError);
}

TEST_CASE("profile construction rejects malformed node sets") {
    CHECK_THROWS_AS(SpatialProfile({0.0}, {1.0}), InvalidInput);
    CHECK_THROWS_AS(SpatialProfile({0.0, 0.0, 1.0}, {1.0, 1.0, 1.0}), InvalidInput);
    CHECK_THROWS_AS(SpatialProfile({0.0, 1.0}, {1.0}), InvalidInput);
    CHECK_THROWS_AS(SpatialProfile({0.0, 1.0}, {1.0, NAN}), InvalidInput);
}

TEST_CASE("step profile matches the hand-written ramp step") {
    const SpatialProfile p = fixture::baseline_step();
    for (int k = 0; k <= 1000; ++k) {
        const double x = k / 1000.0;
        CHECK(p(x) == doctest::Approx(oracle::baseline_weight(x)).epsilon(1e-14));
    }
    CHECK(p(0.5) == 1.0);
    CHECK(p(0.1) == -1.0);
}

TEST_CASE("integrals agree with brute-force quadrature") {
    const SpatialProfile p({0.0, 0.3, 0.7, 1.0}, {-1.0, 2.0, -0.5, 0.25});
    auto g = [&](double x) { return p(x); };
    CHECK(p.integral() == doctest::Approx(brute_integral(g, 0.0, 1.0)).epsilon(1e-9));
    CHECK(p.integral(0.1, 0.8) == doctest::Approx(brute_integral(g, 0.1, 0.8)).epsilon(1e-9));
    auto pos = [&](double x) { return std::max(p(x), 0.0); };
    CHECK(integral_of_positive_part(p, 0.05, 0.95) == doctest::Approx(brute_integral(pos, 0.05, 0.95)).epsilon(1e-9));

    const SpatialProfile q({0.0, 0.5, 1.0}, {0.5, -3.0, 1.0});
    auto amax = [&](double x) { return std::max(std::abs(p(x)), std::abs(q(x))); };
    CHECK(integral_of_abs_max(p, q) == doctest::Approx(brute_integral(amax, 0.0, 1.0)).epsilon(1e-9));
}

TEST_CASE("resampling on a superset of the nodes preserves the function") {
    const SpatialProfile p({0.0, 0.3, 1.0}, {1.0, -2.0, 0.5});
    const std::vector<double> extra{0.0, 0.1, 0.3, 0.55, 0.9, 1.0};
    const SpatialProfile r = p.resampled(extra);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double x = u(rng);
        CHECK(r(x) == doctest::Approx(p(x)).epsilon(1e-14));
    }
}

TEST_CASE("merge_nodes forms the sorted union") {
    const std::vector<double> a{0.0, 0.5, 1.0}, b{0.0, 0.25, 0.5, 1.0};
    CHECK(merge_nodes(a, b) == std::vector<double>{0.0, 0.25, 0.5, 1.0});
}

TEST_CASE("min and max over nodes") {
    const SpatialProfile p({0.0, 0.3, 1.0}, {1.0, -2.0, 0.5});
    CHECK(p.min_value() == -2.0);
    CHECK(p.max_value() == 1.0);
    CHECK_FALSE(p.is_zero());
    CHECK(SpatialProfile::constant(fixture::unit, 0.0).is_zero());
}
