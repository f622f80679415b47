#include <benchmark/benchmark.h>

#include "focidose/estimate.hpp"
#include "focidose/model.hpp"
#include "focidose/specfun.hpp"
#include "focidose/surface.hpp"

using namespace focidose;

namespace {

const CalibrationResult& calibrated_fixture() {
    static const CalibrationResult fixture = [] {
        MixtureParams truth;
        truth.weights = {0.3, 0.7};
        truth.components = {{0.8, 0.5, -0.3, -0.2}, {2.5, 1.5, -0.5, -0.2}};
        truth.u = -0.2;
        for (auto& comp : truth.components) comp.u = -0.2;
        std::vector<DesignPoint> design;
        for (double d : {0.0, 1.0, 2.0, 3.0})
            for (double t : {0.5, 2.0, 24.0}) design.push_back({d, t, 500});
        const CalibrationDataset data = sample_synthetic(truth, design, 21);
        FitConfig config;
        config.starts = 8;
        config.seed = 2;
        return laplace_approx(data, fit_map(data, 2, true, config), {}, config);
    }();
    return fixture;
}

}  // namespace

static void BM_RatioNormalPdf(benchmark::State& state) {
    specfun::BivariateNormalSpec spec{3.0, 10.0, 0.5, 0.1, 0.2};
    double w = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(specfun::ratio_normal_pdf(w, spec));
        w = w < 1.0 ? w + 1e-3 : 0.0;
    }
}
BENCHMARK(BM_RatioNormalPdf);

static void BM_LinearCoeffs(benchmark::State& state) {
    const CalibrationResult& calib = calibrated_fixture();
    double t = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(linear_coeffs(calib, t));
        t = t < 24.0 ? t + 0.01 : 0.5;
    }
}
BENCHMARK(BM_LinearCoeffs);

static void BM_MarginalQuadrature(benchmark::State& state) {
    const CalibrationResult& calib = calibrated_fixture();
    TestSummary test{500, 4.1, 0.23};
    const TimePrior prior = TimePrior::uniform(1.0, 3.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(marginal_dose_quadrature(calib, test, prior));
    }
}
BENCHMARK(BM_MarginalQuadrature)->Unit(benchmark::kMillisecond);

static void BM_MarginalMonteCarlo(benchmark::State& state) {
    const CalibrationResult& calib = calibrated_fixture();
    TestSummary test{500, 4.1, 0.23};
    const TimePrior prior = TimePrior::uniform(1.0, 3.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            marginal_dose_monte_carlo(calib, test, prior, 100000, 5));
    }
}
BENCHMARK(BM_MarginalMonteCarlo)->Unit(benchmark::kMillisecond);
