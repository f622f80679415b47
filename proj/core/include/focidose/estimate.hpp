#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focidose/calibrate.hpp"
#include "focidose/priors.hpp"
#include "focidose/specfun.hpp"

namespace focidose {

// Patient-side sufficient statistics: scored cells, mean foci per cell and
// its standard error. The expected count is treated as N(mean, se^2); below
// ~30 cells that normal approximation is shaky and a warning is attached.
struct TestSummary {
    int n = 0;
    double mean = 0.0;
    double se = 0.0;

    void validate() const;
    bool small_sample() const { return n < 30; }
};

enum class DoseMethod { Quadrature, MonteCarlo };

struct DoseSummary {
    double median = 0.0;
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
};

// Posterior of the absorbed dose: a normalized density grid, plus the raw
// draws when the Monte Carlo path produced it.
struct DosePosterior {
    std::vector<double> dose_grid;
    std::vector<double> density;
    std::vector<double> samples;
    DoseMethod method = DoseMethod::Quadrature;
    DoseSummary summary;
    double rejection_fraction = 0.0;
    std::vector<std::string> warnings;
};

// Reporting grid; the ratio density has support on the whole real line, so
// the default covers [-1, 6] Gy at 5 mGy spacing and is widened
// automatically while noticeable mass sits in an outermost cell.
struct DoseGridSpec {
    double lo_gy = -1.0;
    double hi_gy = 6.0;
    double step_gy = 0.005;
    bool auto_widen = true;
};

struct EstimateOptions {
    double level = 0.95;
    bool truncate_nonnegative = false;  // renormalize the reported grid to d >= 0
    double quad_abs_tol = 1e-8;         // time-marginalization tolerance per dose
    int threads = 0;
};

// Exact conditional density of the dose at fixed time: the ratio-of-normals
// law of (mu - alpha_t) / beta_t with the delta-method coefficient
// uncertainty folded in.
double conditional_dose_pdf(double dose_gy, double time_h,
                            const CalibrationResult& calib, const TestSummary& test);

// Marginal dose posterior by adaptive quadrature over the time prior.
DosePosterior marginal_dose_quadrature(const CalibrationResult& calib,
                                       const TestSummary& test, const TimePrior& prior,
                                       const DoseGridSpec& grid = {},
                                       const EstimateOptions& options = {});

// Marginal dose posterior by forward simulation: draw t*, draw
// (alpha, beta) from their bivariate normal at t*, draw mu*, record
// (mu* - alpha) / beta. Non-positive beta draws are rejected and recounted;
// a rejection fraction above 1% flags the result. Deterministic per seed.
DosePosterior marginal_dose_monte_carlo(const CalibrationResult& calib,
                                        const TestSummary& test, const TimePrior& prior,
                                        int draws, std::uint64_t seed,
                                        const DoseGridSpec& grid = {},
                                        const EstimateOptions& options = {});

// Median, mean and the equal-tailed interval at `level`, from the grid CDF
// or the empirical draws depending on how the posterior was produced.
DoseSummary summarize(const DosePosterior& posterior, double level);

}  // namespace focidose
