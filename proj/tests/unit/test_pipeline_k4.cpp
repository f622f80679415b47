#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "focidose/artifact.hpp"
#include "focidose/calibrate.hpp"
#include "focidose/estimate.hpp"
#include "focidose/model.hpp"
#include "focidose/surface.hpp"
#include "focidose/version.hpp"

using namespace focidose;

namespace {

// Well-separated four-component mixture in the 16-parameter shared-u form.
MixtureParams four_component_truth() {
    MixtureParams params;
    params.weights = {0.15, 0.2, 0.3, 0.35};
    params.components = {{0.4, 0.25, -0.15, -0.2},
                         {1.0, 0.7, -0.3, -0.2},
                         {2.1, 1.5, -0.5, -0.2},
                         {3.6, 2.6, -0.7, -0.2}};
    params.u = -0.2;
    for (auto& comp : params.components) comp.u = -0.2;
    return params;
}

double model_mean(const MixtureParams& params, double d, double t) {
    double mu = 0.0;
    for (int j = 0; j < params.k(); ++j)
        mu += params.weights[j] *
              component_mean(params.components[j], params.component_u(j), d, t);
    return mu;
}

double model_variance(const MixtureParams& params, double d, double t) {
    const double mean = model_mean(params, d, t);
    double second = 0.0;
    for (int j = 0; j < params.k(); ++j) {
        const double lam =
            component_mean(params.components[j], params.component_u(j), d, t);
        second += params.weights[j] * lam * lam;
    }
    return mean + second - mean * mean;
}

}  // namespace

TEST_CASE("sixteen-parameter pipeline: fit, artifact, estimate") {
    const MixtureParams truth = four_component_truth();
    std::vector<DesignPoint> design;
    for (double d : {0.0, 0.75, 1.5, 2.25, 3.0})
        for (double t : {0.5, 2.0, 8.0, 24.0}) design.push_back({d, t, 400});
    const CalibrationDataset data = sample_synthetic(truth, design, 160901);

    FitConfig config;
    config.starts = 12;
    config.seed = 5;
    const ModeFit mode = fit_map(data, 4, true, config);
    const CalibrationResult result = laplace_approx(data, mode, {}, config);

    REQUIRE(result.p() == 16);
    CHECK(result.parameter_order.size() == 16);
    int independent = 0;
    for (int i = 0; i < 16; ++i)
        for (int j = i; j < 16; ++j) ++independent;
    CHECK(independent == 136);
    CHECK((result.covariance - result.covariance.transpose()).cwiseAbs().maxCoeff() <
          1e-10);
    // canonical component order
    for (int j = 1; j < 4; ++j)
        CHECK(result.params.components[j - 1].a <= result.params.components[j].a);

    // the fitted surface tracks the generating surface within sampling noise
    for (const DesignPoint& point : design) {
        const double se =
            std::sqrt(model_variance(truth, point.dose_gy, point.time_h) / 400.0);
        CHECK(std::abs(model_mean(result.params, point.dose_gy, point.time_h) -
                       model_mean(truth, point.dose_gy, point.time_h)) < 4.0 * se);
    }

    // artifact round trip through the filesystem stays byte-identical
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "focidose_pipeline_test";
    fs::create_directories(dir);
    CalibrationArtifact artifact;
    artifact.tool_version = kVersion;
    artifact.provenance = data.provenance();
    artifact.seed = config.seed;
    artifact.result = result;
    artifact.save(dir / "k4.txt");
    const CalibrationArtifact loaded = CalibrationArtifact::load(dir / "k4.txt");
    CHECK(loaded.serialize() == artifact.serialize());
    fs::remove_all(dir);

    // estimating at a design condition recovers the generating dose
    const double d_true = 1.5, t_true = 2.0;
    TestSummary test;
    test.n = 500;
    test.mean = model_mean(truth, d_true, t_true);
    test.se = std::sqrt(model_variance(truth, d_true, t_true) / 500.0);
    const auto post = marginal_dose_quadrature(
        loaded.result, test, TimePrior::nonstandard_beta(5, 5, 1.0, 3.0));
    CHECK(post.summary.lower < d_true);
    CHECK(post.summary.upper > d_true);
    CHECK(std::abs(post.summary.median - d_true) < 0.25);

    const auto mc = marginal_dose_monte_carlo(
        loaded.result, test, TimePrior::nonstandard_beta(5, 5, 1.0, 3.0), 100000, 8);
    CHECK(std::abs(post.summary.median - mc.summary.median) < 0.02);
}
