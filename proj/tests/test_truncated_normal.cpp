#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gridsense/truncated_normal.hpp"
#include "oracles.hpp"

using namespace gridsense;

TEST_CASE("erfcx against direct evaluation") {
    for (double x : {-3.0, -1.0, -0.2, 0.0, 0.4, 1.5, 2.9, 3.0, 3.1, 5.0}) {
        const double direct = std::exp(x * x) * std::erfc(x);
        CHECK(erfcx(x) == doctest::Approx(direct).epsilon(1e-13));
    }
    // asymptotic 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4))
    for (double x : {30.0, 100.0, 1e4}) {
        const double series = (1.0 - 0.5 / (x * x) + 0.75 / (x * x * x * x)) / (x * std::sqrt(std::numbers::pi));
        CHECK(erfcx(x) == doctest::Approx(series).epsilon(1e-10));
    }
}

TEST_CASE("half-normal and unbounded cells") {
    const auto h = standard_truncated_moments(0.0, INFINITY);
    CHECK(h.mean == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-14));
    CHECK(h.variance == doctest::Approx(1.0 - 2.0 / std::numbers::pi).epsilon(1e-14));
    const auto l = standard_truncated_moments(-INFINITY, 0.0);
    CHECK(l.mean == doctest::Approx(-h.mean).epsilon(1e-14));
    const auto u = standard_truncated_moments(-INFINITY, INFINITY);
    CHECK(u.mean == 0.0);
    CHECK(u.variance == 1.0);
}

TEST_CASE("symmetric cell has zero mean") {
    const auto m = standard_truncated_moments(-1.3, 1.3);
    CHECK(std::abs(m.mean) < 1e-15);
    const auto n = standard_truncated_moments(-0.1, 0.1);
    CHECK(std::abs(n.mean) < 1e-15);
    CHECK(n.variance == doctest::Approx(0.01 / 3.0).epsilon(1e-3));
}

TEST_CASE("far tails stay finite") {
    for (double a : {-1e3, -60.0, -40.0, -38.5, -10.0}) {
        const auto one = standard_truncated_moments(-INFINITY, a);
        CHECK(std::isfinite(one.mean));
        CHECK(one.variance > 0.0);
        CHECK(one.mean < a);
        CHECK(one.mean > a - 1.0 / std::abs(a) - 1e-12);
        const auto two = standard_truncated_moments(a, a + 0.5);
        CHECK(std::isfinite(two.mean));
        CHECK(two.variance > 0.0);
        CHECK((two.mean > a && two.mean < a + 0.5));
        const auto upper = standard_truncated_moments(-a, INFINITY);
        CHECK(upper.mean == doctest::Approx(-one.mean).epsilon(1e-14));
    }
    // Mass far below double underflow.
    const auto deep = standard_truncated_moments(1e4, 1e4 + 1.0);
    CHECK(std::isfinite(deep.mean));
    CHECK(deep.mean == doctest::Approx(1e4 + 1e-4).epsilon(1e-12));
    CHECK(deep.variance == doctest::Approx(1e-8).epsilon(1e-3));
}

TEST_CASE("invalid interval") {
    CHECK_THROWS(standard_truncated_moments(1.0, 1.0));
    CHECK_THROWS(standard_truncated_moments(NAN, 1.0));
}

TEST_CASE("matches quadrature on random cells") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> centre(-7.0, 7.0), width(0.01, 4.0), coin(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
        double a = centre(rng), b = a + width(rng);
        if (coin(rng) < 0.15) a = -INFINITY;
        else if (coin(rng) < 0.15) b = INFINITY;
        const auto got = standard_truncated_moments(a, b);
        // N(0, 1) is rho = 2 in the oracle's parametrization
        const auto want = oracle::component_posterior(0.0, 2.0, 0.0, a, b);
        INFO("a=" << a << " b=" << b);
        CHECK(std::abs(got.mean - want.mean) <= 1e-10 * std::max(1.0, std::abs(want.mean)));
        CHECK(std::abs(got.variance - want.variance) <= 1e-9 * want.variance);
    }
}
