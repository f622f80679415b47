#include <doctest.h>

#include <cmath>

#include "focidose/model.hpp"
#include "focidose/oracle.hpp"
#include "focidose/surface.hpp"
#include "focidose/transform.hpp"

using namespace focidose;

namespace {

// Calibration result assembled by hand: exact params with a chosen free-space
// covariance, bypassing a fit for closed-form checks.
CalibrationResult make_result(const MixtureParams& params, double cov_scale) {
    const FreeParametrization map(params.k(), params.shared_u);
    CalibrationResult result;
    result.params = params;
    result.free_mode = map.to_free(params);
    result.covariance =
        cov_scale * Eigen::MatrixXd::Identity(map.dim(), map.dim());
    result.parameter_order = map.parameter_order();
    result.k = params.k();
    result.shared_u = params.shared_u;
    return result;
}

MixtureParams mixed_params() {
    MixtureParams params;
    params.weights = {0.4, 0.6};
    params.components = {{0.9, 0.6, -0.3, -0.2}, {2.2, 1.4, -0.5, -0.2}};
    params.u = -0.2;
    return params;
}

}  // namespace

TEST_CASE("zero exponents collapse to constant coefficients") {
    MixtureParams params;
    params.weights = {1.0};
    params.components = {{2.0, 1.0, 0.0, 0.0}};
    const CalibrationResult calib = make_result(params, 1e-6);
    for (double t : {0.25, 1.0, 7.0, 24.0}) {
        const LinearCoeffs coeffs = linear_coeffs(calib, t);
        CHECK(coeffs.alpha == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(coeffs.beta == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("at t = 1 the powers vanish") {
    const CalibrationResult calib = make_result(mixed_params(), 1e-6);
    const LinearCoeffs coeffs = linear_coeffs(calib, 1.0);
    CHECK(coeffs.alpha == doctest::Approx(0.4 * 0.6 + 0.6 * 1.4).epsilon(1e-14));
    CHECK(coeffs.beta == doctest::Approx(0.4 * 0.9 + 0.6 * 2.2).epsilon(1e-14));
}

TEST_CASE("coefficient means equal the direct component sums") {
    const CalibrationResult calib = make_result(mixed_params(), 1e-4);
    for (double t : {0.5, 2.0, 9.0}) {
        const LinearCoeffs coeffs = linear_coeffs(calib, t);
        double alpha = 0.0, beta = 0.0;
        for (int j = 0; j < 2; ++j) {
            alpha += calib.params.weights[j] * calib.params.components[j].c *
                     std::pow(t, calib.params.u);
            beta += calib.params.weights[j] * calib.params.components[j].a *
                    std::pow(t, calib.params.components[j].v);
        }
        CHECK(coeffs.alpha == doctest::Approx(alpha).epsilon(1e-12));
        CHECK(coeffs.beta == doctest::Approx(beta).epsilon(1e-12));
    }
}

TEST_CASE("delta covariance matches sampled propagation") {
    const CalibrationResult calib = make_result(mixed_params(), 4e-4);
    for (double t : {0.5, 4.0, 10.0}) {
        const LinearCoeffs coeffs = linear_coeffs(calib, t);
        const auto sampled = oracle::mc_delta_propagation(calib, t, 400000, 2025);
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                const double tol = std::max(
                    0.05 * std::abs(coeffs.covariance(r, c)),
                    1e-6 + 0.02 * std::sqrt(coeffs.covariance(r, r) *
                                            coeffs.covariance(c, c)));
                CHECK(std::abs(sampled.covariance(r, c) - coeffs.covariance(r, c)) <
                      tol);
            }
    }
}

TEST_CASE("delta covariance is PD with correlation inside (-1, 1)") {
    const CalibrationResult calib = make_result(mixed_params(), 1e-3);
    for (double t : {0.5, 1.0, 2.0, 4.0, 10.0, 24.0}) {
        const LinearCoeffs coeffs = linear_coeffs(calib, t);
        CHECK(coeffs.covariance(0, 0) > 0.0);
        CHECK(coeffs.covariance(1, 1) > 0.0);
        const double corr =
            coeffs.covariance(0, 1) /
            std::sqrt(coeffs.covariance(0, 0) * coeffs.covariance(1, 1));
        CHECK(corr > -1.0);
        CHECK(corr < 1.0);
        CHECK(coeffs.covariance.determinant() > 0.0);
    }
}

TEST_CASE("coefficients are continuous in t") {
    const CalibrationResult calib = make_result(mixed_params(), 1e-4);
    for (double t : {0.5, 2.0, 10.0}) {
        const LinearCoeffs at_t = linear_coeffs(calib, t);
        const LinearCoeffs nearby = linear_coeffs(calib, t + 1e-6);
        CHECK(std::abs(nearby.alpha - at_t.alpha) / at_t.alpha < 1e-4);
        CHECK(std::abs(nearby.beta - at_t.beta) / at_t.beta < 1e-4);
    }
}

TEST_CASE("mean surface is affine in dose") {
    const CalibrationResult calib = make_result(mixed_params(), 1e-4);
    const double t = 3.7;
    CHECK(mean_surface(calib, 0.0, t) ==
          doctest::Approx(linear_coeffs(calib, t).alpha).epsilon(1e-14));
    const double second_difference = mean_surface(calib, 2.0, t) -
                                     2.0 * mean_surface(calib, 1.0, t) +
                                     mean_surface(calib, 0.0, t);
    CHECK(std::abs(second_difference) < 1e-12);
}

TEST_CASE("unit-slope oracle model evaluates to 1 + d") {
    MixtureParams params;
    params.weights = {1.0};
    params.components = {{1.0, 1.0, 0.0, 0.0}};
    const CalibrationResult calib = make_result(params, 1e-8);
    for (double d : {0.0, 0.5, 2.0})
        CHECK(mean_surface(calib, d, 11.0) == doctest::Approx(1.0 + d).epsilon(1e-12));
}

TEST_CASE("surface grid rows and their standard deviations") {
    const CalibrationResult calib = make_result(mixed_params(), 1e-3);
    const auto single = surface_grid(calib, {1.5}, {2.0});
    REQUIRE(single.size() == 1);
    CHECK(single[0].mu == doctest::Approx(mean_surface(calib, 1.5, 2.0)));

    const auto rows = surface_grid(calib, {0.0, 1.0, 2.0, 3.0}, {2.0});
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].mu > rows[i - 1].mu);  // beta > 0

    const LinearCoeffs coeffs = linear_coeffs(calib, 2.0);
    for (const SurfaceRow& row : rows) {
        Eigen::Vector2d sens(1.0, row.dose_gy);
        CHECK(row.sd ==
              doctest::Approx(std::sqrt(sens.dot(coeffs.covariance * sens)))
                  .epsilon(1e-12));
    }
}

TEST_CASE("errors: bad time and tampered parameter order") {
    const CalibrationResult calib = make_result(mixed_params(), 1e-4);
    CHECK_THROWS_AS(linear_coeffs(calib, 0.0), DomainError);
    CHECK_THROWS_AS(linear_coeffs(calib, -2.0), DomainError);

    CalibrationResult tampered = calib;
    tampered.parameter_order[0] = "log_a_1";
    CHECK_THROWS_AS(linear_coeffs(tampered, 1.0), NumericError);
}
