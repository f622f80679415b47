#include "focidose/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "focidose/model.hpp"
#include "focidose/rng.hpp"
#include "focidose/surface.hpp"
#include "focidose/transform.hpp"

namespace focidose::oracle {

double kummer_series(double z, int terms) {
    if (!(z >= 0.0)) throw DomainError("kummer_series requires z >= 0");
    if (terms < 1) throw DomainError("kummer_series requires at least one term");
    double sum = 1.0;
    double term = 1.0;
    for (int k = 0; k < terms - 1; ++k) {
        term *= z / (0.5 + k);
        sum += term;
    }
    return sum;
}

Histogram mc_ratio_histogram(const specfun::BivariateNormalSpec& spec,
                             std::size_t draws, int bins, std::uint64_t seed,
                             double tail_quantile) {
    spec.validate();
    if (draws < 1000000)
        throw DomainError("mc_ratio_histogram needs at least 1e6 draws");
    if (bins < 2) throw DomainError("mc_ratio_histogram needs at least 2 bins");

    std::mt19937_64 engine = make_engine(seed, 0x0a11);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double cross = spec.rho * spec.sigma_y;
    const double resid = spec.sigma_y * std::sqrt(1.0 - spec.rho * spec.rho);

    std::vector<double> ratios(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        const double z1 = unit(engine);
        const double z2 = unit(engine);
        const double x = spec.mu_x + spec.sigma_x * z1;
        const double y = spec.mu_y + cross * z1 + resid * z2;
        ratios[i] = x / y;
    }
    std::sort(ratios.begin(), ratios.end());

    const std::size_t lo_idx =
        static_cast<std::size_t>(tail_quantile * (draws - 1));
    const std::size_t hi_idx =
        static_cast<std::size_t>((1.0 - tail_quantile) * (draws - 1));
    const double lo = ratios[lo_idx];
    const double hi = ratios[hi_idx];

    Histogram hist;
    hist.draws = draws;
    hist.edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b)
        hist.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
    hist.density.assign(bins, 0.0);
    const double width = (hi - lo) / bins;
    for (double r : ratios) {
        if (r < lo || r >= hi) continue;
        const int b = std::min(bins - 1, static_cast<int>((r - lo) / width));
        hist.density[b] += 1.0;
    }
    hist.se.resize(bins);
    const double n = static_cast<double>(draws);
    for (int b = 0; b < bins; ++b) {
        const double count = hist.density[b];
        const double p = count / n;
        hist.se[b] = std::sqrt(std::max(p * (1.0 - p), 1.0 / n) * n) / (n * width);
        hist.density[b] = count / (n * width);
    }
    return hist;
}

DeltaPropagation mc_delta_propagation(const CalibrationResult& calib, double time_h,
                                      std::size_t draws, std::uint64_t seed) {
    if (draws < 100000)
        throw DomainError("mc_delta_propagation needs at least 1e5 draws");
    if (!(time_h > 0.0)) throw DomainError("time must be positive");

    const FreeParametrization map(calib.k, calib.shared_u, calib.prior);
    const Eigen::Index p = calib.free_mode.size();
    Eigen::LLT<Eigen::MatrixXd> llt(calib.covariance);
    if (llt.info() != Eigen::Success)
        throw NumericError("calibration covariance is not positive definite");
    const Eigen::MatrixXd chol = llt.matrixL();

    std::mt19937_64 engine = make_engine(seed, 0xde17a);
    std::normal_distribution<double> unit(0.0, 1.0);

    // accumulate deviations from a pivot (the first draw) so near-degenerate
    // covariances are not lost to cancellation
    double pivot_a = 0.0, pivot_b = 0.0;
    double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
    Eigen::VectorXd z(p), x(p);
    for (std::size_t i = 0; i < draws; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) z[j] = unit(engine);
        x = calib.free_mode + chol * z;
        const MixtureParams params = map.from_free(x);
        double alpha = 0.0, beta = 0.0;
        for (int j = 0; j < params.k(); ++j) {
            alpha += params.weights[j] * params.components[j].c *
                     std::pow(time_h, params.component_u(j));
            beta += params.weights[j] * params.components[j].a *
                    std::pow(time_h, params.components[j].v);
        }
        if (i == 0) {
            pivot_a = alpha;
            pivot_b = beta;
        }
        const double da = alpha - pivot_a;
        const double db = beta - pivot_b;
        sum_a += da;
        sum_b += db;
        sum_aa += da * da;
        sum_bb += db * db;
        sum_ab += da * db;
    }

    const double n = static_cast<double>(draws);
    DeltaPropagation out;
    out.draws = draws;
    out.mean_alpha = pivot_a + sum_a / n;
    out.mean_beta = pivot_b + sum_b / n;
    out.covariance(0, 0) = sum_aa / n - (sum_a / n) * (sum_a / n);
    out.covariance(1, 1) = sum_bb / n - (sum_b / n) * (sum_b / n);
    out.covariance(0, 1) = sum_ab / n - (sum_a / n) * (sum_b / n);
    out.covariance(1, 0) = out.covariance(0, 1);
    return out;
}

namespace {

OracleReport report(std::string check, double statistic, double threshold,
                    std::uint64_t seed, std::size_t n) {
    OracleReport r;
    r.check = std::move(check);
    r.statistic = statistic;
    r.threshold = threshold;
    r.pass = statistic <= threshold;
    r.seed = seed;
    r.sample_size = n;
    return r;
}

}  // namespace

std::vector<OracleReport> run_all(std::uint64_t seed) {
    std::vector<OracleReport> reports;

    // closed-form 1F1 against the series on a z grid; series terms keep
    // growing until k ~ z, so the truncation length scales with z (60 terms
    // only reach ~1e-6 relative at z = 30)
    {
        double worst = 0.0;
        for (double z : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0}) {
            const int terms = std::max(60, static_cast<int>(4.0 * z + 20.0));
            const double closed = specfun::kummer_1f1_half(z);
            const double series = kummer_series(z, terms);
            worst = std::max(worst, std::abs(closed - series) / std::max(1.0, series));
        }
        reports.push_back(report("kummer_closed_vs_series", worst, 1e-9, seed, 8));
    }

    // ratio density against the standard Cauchy special case
    {
        specfun::BivariateNormalSpec cauchy;
        double worst = 0.0;
        for (double w : {0.0, 0.5, -0.5, 2.0, -2.0}) {
            const double expect = 1.0 / (M_PI * (1.0 + w * w));
            worst = std::max(worst,
                             std::abs(specfun::ratio_normal_pdf(w, cauchy) - expect));
        }
        reports.push_back(report("ratio_density_cauchy_case", worst, 1e-10, seed, 5));
    }

    // ratio density against direct simulation, generic dependent specs
    {
        const specfun::BivariateNormalSpec specs[] = {
            {3.0, 10.0, 0.5, 0.1, 0.2},
            {-1.0, 6.0, 1.2, 0.4, -0.5},
            {0.5, 4.0, 0.25, 0.3, 0.35},
        };
        double worst = 0.0;
        const std::size_t draws = 2000000;
        for (const auto& spec : specs) {
            Histogram hist = mc_ratio_histogram(spec, draws, 40, seed);
            for (std::size_t b = 0; b < hist.density.size(); ++b) {
                const double mid = 0.5 * (hist.edges[b] + hist.edges[b + 1]);
                const double err =
                    std::abs(hist.density[b] - specfun::ratio_normal_pdf(mid, spec));
                // discrepancy in MC-standard-error units, bin-width bias allowed
                const double width = hist.edges[b + 1] - hist.edges[b];
                const double curvature_slack =
                    0.05 * specfun::ratio_normal_pdf(mid, spec) * width;
                worst = std::max(worst, (err - curvature_slack) / hist.se[b]);
            }
        }
        reports.push_back(
            report("ratio_density_vs_simulation", worst, 3.0, seed, 3 * draws));
    }

    // delta-method covariance against sampled propagation on a synthetic fit
    {
        MixtureParams truth;
        truth.weights = {1.0};
        truth.components = {{1.2, 0.9, -0.3, 0.0}};
        truth.u = -0.15;
        truth.shared_u = true;
        truth.components[0].u = truth.u;
        std::vector<DesignPoint> design;
        for (double d : {0.0, 1.0, 2.0, 3.0})
            for (double t : {0.5, 2.0, 8.0}) design.push_back({d, t, 250});
        const CalibrationDataset data = sample_synthetic(truth, design, seed + 1);
        FitConfig config;
        config.starts = 8;
        config.seed = seed + 2;
        const ModeFit mode = fit_map(data, 1, true, config);
        const CalibrationResult calib = laplace_approx(data, mode, {}, config);

        double worst = 0.0;
        const std::size_t draws = 200000;
        for (double t : {0.5, 4.0, 10.0}) {
            const DeltaPropagation sampled = mc_delta_propagation(calib, t, draws, seed);
            const Eigen::Matrix2d delta = linear_coeffs(calib, t).covariance;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c) {
                    const double scale = std::sqrt(delta(r, r) * delta(c, c));
                    worst = std::max(worst, std::abs(sampled.covariance(r, c) -
                                                     delta(r, c)) /
                                                std::max(scale, 1e-300));
                }
        }
        reports.push_back(
            report("delta_covariance_vs_sampling", worst, 0.05, seed, 3 * draws));
    }

    return reports;
}

}  // namespace focidose::oracle
