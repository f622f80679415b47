#include <benchmark/benchmark.h>

#include "focidose/calibrate.hpp"
#include "focidose/model.hpp"

using namespace focidose;

namespace {

MixtureParams four_component_params() {
    MixtureParams params;
    params.weights = {0.15, 0.25, 0.3, 0.3};
    params.components = {{0.5, 0.3, -0.2, -0.2},
                         {1.0, 0.8, -0.4, -0.2},
                         {1.8, 1.2, -0.6, -0.2},
                         {3.0, 2.0, -0.8, -0.2}};
    params.u = -0.2;
    for (auto& comp : params.components) comp.u = -0.2;
    return params;
}

CalibrationDataset six_thousand_cells() {
    std::vector<DesignPoint> design;
    for (double d : {0.0, 1.0, 2.0, 3.0})
        for (double t : {0.5, 2.0, 24.0}) design.push_back({d, t, 500});
    return sample_synthetic(four_component_params(), design, 7);
}

}  // namespace

static void BM_LogLikelihoodK4(benchmark::State& state) {
    const CalibrationDataset data = six_thousand_cells();
    const LikelihoodEvaluator eval(data);
    const MixtureParams params = four_component_params();
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval.log_likelihood(params));
    }
}
BENCHMARK(BM_LogLikelihoodK4);

static void BM_LogLikelihoodGradK4(benchmark::State& state) {
    const CalibrationDataset data = six_thousand_cells();
    const LikelihoodEvaluator eval(data);
    const MixtureParams params = four_component_params();
    OriginalGradient grad;
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval.log_likelihood_grad(params, grad));
    }
}
BENCHMARK(BM_LogLikelihoodGradK4);

static void BM_FitMapK2(benchmark::State& state) {
    MixtureParams truth;
    truth.weights = {0.3, 0.7};
    truth.components = {{0.8, 0.5, -0.3, -0.2}, {2.5, 1.5, -0.5, -0.2}};
    truth.u = -0.2;
    for (auto& comp : truth.components) comp.u = -0.2;
    std::vector<DesignPoint> design;
    for (double d : {0.0, 1.0, 2.0, 3.0})
        for (double t : {0.5, 2.0, 24.0}) design.push_back({d, t, 500});
    const CalibrationDataset data = sample_synthetic(truth, design, 11);
    FitConfig config;
    config.starts = static_cast<int>(state.range(0));
    config.seed = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_map(data, 2, true, config));
    }
}
BENCHMARK(BM_FitMapK2)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
