#include <doctest.h>

#include <cmath>

#include "cbitcl/quadrature.hpp"

using namespace cbitcl;

TEST_CASE("gk15 adaptive: smooth integrands") {
    auto r = quad::integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));

    auto r2 = quad::integrate([](double x) { return std::exp(-x * x); }, -6.0, 6.0);
    CHECK(r2.value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("gk15 adaptive: integrable endpoint singularity") {
    auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                             {1e-9, 1e-12, 20000, true});
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("semi-infinite transforms") {
    auto upper = quad::integrate_upper_infinite([](double x) { return std::exp(-x); }, 0.0);
    CHECK(upper.value == doctest::Approx(1.0).epsilon(1e-10));

    auto shifted =
        quad::integrate_upper_infinite([](double x) { return std::exp(-2.0 * x); }, 1.5);
    CHECK(shifted.value == doctest::Approx(std::exp(-3.0) / 2.0).epsilon(1e-10));

    auto lower = quad::integrate_lower_infinite([](double x) { return std::exp(x); }, -1.0);
    CHECK(lower.value == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("stall reporting") {
    quad::Options opt;
    opt.rel_tol = 1e-15;
    opt.abs_tol = 1e-300;
    opt.max_panels = 4;
    CHECK_THROWS_AS(quad::integrate([](double x) { return 1.0 / std::sqrt(1.0 - x); }, 0.0, 1.0, opt),
                    QuadratureError);
    opt.throw_on_stall = false;
    auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(1.0 - x); }, 0.0, 1.0, opt);
    CHECK(r.panels == 4);
    CHECK(r.error > 0.0);
}
