#include <doctest.h>

#include <cmath>

#include "focidose/model.hpp"
#include "focidose/oracle.hpp"
#include "focidose/transform.hpp"

using namespace focidose;

TEST_CASE("kummer series basics") {
    CHECK(oracle::kummer_series(0.0, 10) == 1.0);
    CHECK(oracle::kummer_series(1.0, 30) ==
          doctest::Approx(specfun::kummer_1f1_half(1.0)).epsilon(1e-10));
    // partial sums increase monotonically for positive arguments
    double prev = 0.0;
    for (int terms = 1; terms <= 25; ++terms) {
        const double sum = oracle::kummer_series(2.5, terms);
        CHECK(sum > prev);
        prev = sum;
    }
    CHECK_THROWS_AS(oracle::kummer_series(-1.0, 10), DomainError);
    CHECK_THROWS_AS(oracle::kummer_series(1.0, 0), DomainError);
}

TEST_CASE("ratio histogram reproduces the standard Cauchy") {
    specfun::BivariateNormalSpec cauchy;
    const auto hist = oracle::mc_ratio_histogram(cauchy, 2000000, 40, 7);
    REQUIRE(hist.density.size() == 40);
    for (std::size_t b = 0; b < hist.density.size(); ++b) {
        const double mid = 0.5 * (hist.edges[b] + hist.edges[b + 1]);
        const double expect = 1.0 / (M_PI * (1.0 + mid * mid));
        const double width = hist.edges[b + 1] - hist.edges[b];
        CHECK(std::abs(hist.density[b] - expect) <
              3.0 * hist.se[b] + 0.05 * expect * width * width);
    }
}

TEST_CASE("ratio histogram is deterministic under a fixed seed") {
    specfun::BivariateNormalSpec spec;
    spec.mu_x = 1.0;
    spec.mu_y = 5.0;
    spec.sigma_x = 0.4;
    spec.sigma_y = 0.5;
    spec.rho = 0.3;
    const auto a = oracle::mc_ratio_histogram(spec, 1000000, 20, 12);
    const auto b = oracle::mc_ratio_histogram(spec, 1000000, 20, 12);
    CHECK(a.edges == b.edges);
    CHECK(a.density == b.density);
}

TEST_CASE("delta propagation of a near-deterministic calibration is degenerate") {
    MixtureParams params;
    params.weights = {1.0};
    params.components = {{2.0, 1.0, -0.3, -0.2}};
    params.u = -0.2;
    const FreeParametrization map(1, true);
    CalibrationResult calib;
    calib.params = params;
    calib.free_mode = map.to_free(params);
    calib.covariance = 1e-18 * Eigen::MatrixXd::Identity(4, 4);
    calib.parameter_order = map.parameter_order();
    calib.k = 1;
    calib.shared_u = true;

    const auto prop = oracle::mc_delta_propagation(calib, 3.0, 100000, 5);
    CHECK(prop.covariance.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(prop.mean_alpha ==
          doctest::Approx(1.0 * std::pow(3.0, -0.2)).epsilon(1e-6));

    const auto again = oracle::mc_delta_propagation(calib, 3.0, 100000, 5);
    CHECK(prop.covariance(0, 1) == again.covariance(0, 1));
    CHECK(prop.mean_beta == again.mean_beta);
}

TEST_CASE("the full battery passes and reports are internally consistent") {
    const auto reports = oracle::run_all(20240817);
    REQUIRE(!reports.empty());
    for (const auto& r : reports) {
        CHECK(r.pass == (r.statistic <= r.threshold));
        CHECK(r.pass);
        CHECK(!r.check.empty());
        CHECK(r.sample_size > 0);
    }
}
