#include <doctest.h>

#include <cmath>

#include "focidose/quadrature.hpp"

using namespace focidose;

TEST_CASE("polynomials are integrated exactly") {
    auto cubic = [](double x) { return x * x * x - 2.0 * x + 1.0; };
    const auto res = adaptive_quadrature(cubic, -1.0, 2.0, 1e-12);
    // antiderivative x^4/4 - x^2 + x over [-1, 2]: 2 - (-1.75)
    CHECK(res.value == doctest::Approx(3.75).epsilon(1e-13));
    CHECK(res.converged);
}

TEST_CASE("gaussian integral over a wide interval") {
    auto f = [](double x) { return std::exp(-x * x); };
    const auto res = adaptive_quadrature(f, -6.0, 6.0, 1e-13, 1e-13);
    CHECK(res.value == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
}

TEST_CASE("adaptive refinement resolves a narrow spike") {
    const double mu = 0.637, sd = 2e-3;
    auto spike = [&](double x) {
        const double z = (x - mu) / sd;
        return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
    };
    const auto res = adaptive_quadrature(spike, 0.0, 1.0, 1e-10);
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(res.converged);
}

TEST_CASE("orientation and degenerate interval") {
    auto f = [](double x) { return x; };
    CHECK(adaptive_quadrature(f, 1.0, 0.0, 1e-12).value == doctest::Approx(-0.5));
    CHECK(adaptive_quadrature(f, 2.0, 2.0, 1e-12).value == 0.0);
}
