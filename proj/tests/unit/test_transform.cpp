#include <doctest.h>

#include <cmath>

#include "focidose/transform.hpp"

using namespace focidose;

TEST_CASE("free vector round trip") {
    MixtureParams params;
    params.weights = {0.2, 0.3, 0.5};
    params.components = {{0.8, 0.4, -0.3, -0.2},
                         {1.5, 0.9, -0.5, -0.2},
                         {2.4, 1.7, -0.7, -0.2}};
    params.u = -0.2;
    params.shared_u = true;

    const FreeParametrization map(3, true);
    CHECK(map.dim() == 12);
    const Eigen::VectorXd x = map.to_free(params);
    const MixtureParams back = map.from_free(x);
    for (int j = 0; j < 3; ++j) {
        CHECK(back.weights[j] == doctest::Approx(params.weights[j]).epsilon(1e-14));
        CHECK(back.components[j].a ==
              doctest::Approx(params.components[j].a).epsilon(1e-14));
        CHECK(back.components[j].c ==
              doctest::Approx(params.components[j].c).epsilon(1e-14));
        CHECK(back.components[j].v == params.components[j].v);
    }
    CHECK(back.u == params.u);
}

TEST_CASE("parameter order names every free coordinate") {
    const FreeParametrization shared(4, true);
    const auto names = shared.parameter_order();
    REQUIRE(names.size() == 16);
    CHECK(names.front() == "alr_omega_1");
    CHECK(names[3] == "log_a_1");
    CHECK(names[4] == "log_c_1");
    CHECK(names[5] == "v_1");
    CHECK(names.back() == "u");

    const FreeParametrization general(2, false);
    const auto general_names = general.parameter_order();
    REQUIRE(general_names.size() == 9);
    CHECK(general_names[4] == "u_1");
    CHECK(general_names.back() == "u_2");
}

TEST_CASE("free parameter counts match the sixteen-parameter reference shape") {
    CHECK(free_parameter_count(4, true) == 16);
    CHECK(free_parameter_count(1, true) == 4);
    CHECK(free_parameter_count(2, false) == 9);
}

TEST_CASE("transformed box bounds map the prior boxes") {
    PriorSpec spec;
    const FreeParametrization map(2, true, spec);
    const Eigen::VectorXd lo = map.lower(), hi = map.upper();
    CHECK(lo[1] == doctest::Approx(std::log(1e-6)));
    CHECK(hi[1] == doctest::Approx(std::log(100.0)));
    CHECK(lo[3] == -5.0);  // v_1
    CHECK(hi[map.dim() - 1] == 5.0);  // u
    // every interior point of the box maps to valid params
    const Eigen::VectorXd mid = 0.5 * (lo + hi);
    CHECK_NOTHROW(map.from_free(mid).validate());
}

TEST_CASE("shape mismatches are rejected") {
    const FreeParametrization map(2, true);
    MixtureParams params;
    params.weights = {1.0};
    params.components = {{1.0, 1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(map.to_free(params), DomainError);
    CHECK_THROWS_AS(map.from_free(Eigen::VectorXd::Zero(3)), DomainError);
}
