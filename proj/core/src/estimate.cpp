#include "focidose/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "focidose/parallel.hpp"
#include "focidose/quadrature.hpp"
#include "focidose/rng.hpp"
#include "focidose/surface.hpp"

namespace focidose {

namespace {

constexpr int kMcStreams = 64;       // fixed substream count; results do not
                                     // depend on how many threads consume them
constexpr double kBetaFloor = 1e-10; // slope draws at or below this are rejected

specfun::BivariateNormalSpec ratio_spec_from(const LinearCoeffs& coeffs,
                                             const TestSummary& test) {
    specfun::BivariateNormalSpec spec;
    spec.mu_x = test.mean - coeffs.alpha;
    spec.mu_y = coeffs.beta;
    const double var_x = test.se * test.se + coeffs.covariance(0, 0);
    const double var_y = coeffs.covariance(1, 1);
    if (!(var_y > 0.0))
        throw DomainError("slope variance is zero; the conditional dose density "
                          "is degenerate");
    spec.sigma_x = std::sqrt(var_x);
    spec.sigma_y = std::sqrt(var_y);
    // Cov(X, Y) = Cov(mu - alpha, beta) = -Cov(alpha, beta)
    spec.rho = -coeffs.covariance(0, 1) / (spec.sigma_x * spec.sigma_y);
    spec.rho = std::clamp(spec.rho, -0.999999999, 0.999999999);
    return spec;
}

// Memoized coefficients keyed by the exact time value: the adaptive
// quadrature revisits the same nodes for every grid dose.
class CoeffCache {
public:
    CoeffCache(const CalibrationResult& calib, const TestSummary& test)
        : calib_(calib), test_(test) {}

    const specfun::BivariateNormalSpec& at(double t) {
        const auto [it, inserted] = cache_.try_emplace(t);
        if (inserted) it->second = ratio_spec_from(linear_coeffs(calib_, t), test_);
        return it->second;
    }

private:
    const CalibrationResult& calib_;
    const TestSummary& test_;
    std::unordered_map<double, specfun::BivariateNormalSpec> cache_;
};

std::vector<double> make_grid(const DoseGridSpec& spec) {
    if (!(spec.step_gy > 0.0) || !(spec.lo_gy < spec.hi_gy))
        throw DomainError("dose grid needs lo < hi and step > 0");
    const int n = static_cast<int>(std::round((spec.hi_gy - spec.lo_gy) / spec.step_gy)) + 1;
    if (n < 8) throw DomainError("dose grid has fewer than 8 points");
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = spec.lo_gy + i * spec.step_gy;
    grid.back() = spec.hi_gy;
    return grid;
}

double trapezoid_mass(const std::vector<double>& x, const std::vector<double>& f) {
    double total = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        total += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    return total;
}

// Fraction of raw mass in the first/last grid cell; the truncation symptom.
std::pair<double, double> endpoint_mass(const std::vector<double>& x,
                                        const std::vector<double>& f, double total) {
    const std::size_t n = x.size();
    const double lo = 0.5 * (f[0] + f[1]) * (x[1] - x[0]);
    const double hi = 0.5 * (f[n - 1] + f[n - 2]) * (x[n - 1] - x[n - 2]);
    return {lo / total, hi / total};
}

DoseSummary summary_from_grid(const std::vector<double>& x, const std::vector<double>& f,
                              double level) {
    // cumulative trapezoid CDF with linear interpolation for quantiles
    const std::size_t n = x.size();
    std::vector<double> cdf(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    const double total = cdf.back();

    auto quantile = [&](double q) {
        const double target = q * total;
        auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
        if (it == cdf.begin()) return x.front();
        if (it == cdf.end()) return x.back();
        const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
        const double span = cdf[i] - cdf[i - 1];
        const double frac = span > 0.0 ? (target - cdf[i - 1]) / span : 0.0;
        return x[i - 1] + frac * (x[i] - x[i - 1]);
    };

    DoseSummary out;
    out.level = level;
    out.median = quantile(0.5);
    out.lower = quantile(0.5 * (1.0 - level));
    out.upper = quantile(0.5 * (1.0 + level));
    double mean = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        mean += 0.5 * (f[i] * x[i] + f[i - 1] * x[i - 1]) * (x[i] - x[i - 1]);
    out.mean = mean / total;
    return out;
}

DoseSummary summary_from_samples(std::vector<double> draws, double level) {
    std::sort(draws.begin(), draws.end());
    auto quantile = [&](double q) {
        const double pos = q * (draws.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= draws.size()) return draws.back();
        const double frac = pos - i;
        return draws[i] * (1.0 - frac) + draws[i + 1] * frac;
    };
    DoseSummary out;
    out.level = level;
    out.median = quantile(0.5);
    out.lower = quantile(0.5 * (1.0 - level));
    out.upper = quantile(0.5 * (1.0 + level));
    double sum = 0.0;
    for (double d : draws) sum += d;
    out.mean = sum / draws.size();
    return out;
}

void truncate_and_normalize(DosePosterior& posterior, bool truncate) {
    if (truncate) {
        std::size_t first = 0;
        while (first < posterior.dose_grid.size() && posterior.dose_grid[first] < 0.0)
            ++first;
        if (first >= posterior.dose_grid.size() - 1)
            throw DomainError("truncation to d >= 0 leaves no grid support");
        if (first > 0) {
            posterior.dose_grid.erase(posterior.dose_grid.begin(),
                                      posterior.dose_grid.begin() + first);
            posterior.density.erase(posterior.density.begin(),
                                    posterior.density.begin() + first);
        }
        if (!posterior.samples.empty()) {
            std::erase_if(posterior.samples, [](double d) { return d < 0.0; });
            if (posterior.samples.empty())
                throw DomainError("truncation to d >= 0 removed every draw");
        }
    }
    const double total = trapezoid_mass(posterior.dose_grid, posterior.density);
    if (!(total > 0.0) || !std::isfinite(total))
        throw NumericError("dose density mass is not positive and finite");
    for (double& f : posterior.density) f /= total;
}

}  // namespace

void TestSummary::validate() const {
    if (n < 1) throw DomainError("test summary needs n >= 1 scored cells");
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw DomainError("test summary mean must be finite and >= 0");
    if (!(se > 0.0) || !std::isfinite(se))
        throw DomainError("test summary standard error must be positive");
}

double conditional_dose_pdf(double dose_gy, double time_h,
                            const CalibrationResult& calib, const TestSummary& test) {
    test.validate();
    const LinearCoeffs coeffs = linear_coeffs(calib, time_h);
    return specfun::ratio_normal_pdf(dose_gy, ratio_spec_from(coeffs, test));
}

DosePosterior marginal_dose_quadrature(const CalibrationResult& calib,
                                       const TestSummary& test, const TimePrior& prior,
                                       const DoseGridSpec& grid,
                                       const EstimateOptions& options) {
    test.validate();
    prior.validate();
    if (!(options.level > 0.0 && options.level < 1.0))
        throw DomainError("credible level must lie in (0, 1)");

    DoseGridSpec current = grid;
    DosePosterior posterior;
    posterior.method = DoseMethod::Quadrature;
    if (test.small_sample())
        posterior.warnings.push_back(
            "fewer than 30 scored cells; the normal approximation for the mean "
            "count is unreliable");

    for (int attempt = 0;; ++attempt) {
        posterior.dose_grid = make_grid(current);
        posterior.density.assign(posterior.dose_grid.size(), 0.0);

        if (prior.kind == TimePriorKind::Point) {
            CoeffCache cache(calib, test);
            const specfun::BivariateNormalSpec& spec = cache.at(prior.lower_h);
            for (std::size_t i = 0; i < posterior.dose_grid.size(); ++i)
                posterior.density[i] =
                    specfun::ratio_normal_pdf(posterior.dose_grid[i], spec);
        } else {
            // one coefficient cache per worker; quadrature nodes repeat
            // across grid doses so nearly every lookup hits
            const int workers = resolve_threads(options.threads);
            std::vector<CoeffCache> caches(workers, CoeffCache(calib, test));
            const std::size_t n = posterior.dose_grid.size();
            const std::size_t chunk = (n + workers - 1) / workers;
            parallel_for(static_cast<std::size_t>(workers), workers,
                         [&](std::size_t w) {
                             CoeffCache& cache = caches[w];
                             const std::size_t begin = w * chunk;
                             const std::size_t end = std::min(n, begin + chunk);
                             for (std::size_t i = begin; i < end; ++i) {
                                 const double d = posterior.dose_grid[i];
                                 auto integrand = [&](double t) {
                                     return specfun::ratio_normal_pdf(d, cache.at(t)) *
                                            time_prior_pdf(prior, t);
                                 };
                                 auto res = adaptive_quadrature(
                                     integrand, prior.lower_h, prior.upper_h,
                                     options.quad_abs_tol);
                                 posterior.density[i] = res.value;
                             }
                         });
        }

        const double total = trapezoid_mass(posterior.dose_grid, posterior.density);
        if (!(total > 0.0) || !std::isfinite(total))
            throw NumericError("marginal dose density mass is not positive");
        const auto [lo_frac, hi_frac] =
            endpoint_mass(posterior.dose_grid, posterior.density, total);
        if (lo_frac < 0.005 && hi_frac < 0.005) break;
        if (!current.auto_widen || attempt >= 8) {
            std::ostringstream msg;
            msg << "dose grid [" << current.lo_gy << ", " << current.hi_gy
                << "] Gy is too narrow (endpoint cell mass " << lo_frac << " / "
                << hi_frac << "); widen the grid";
            throw DomainError(msg.str());
        }
        const double width = current.hi_gy - current.lo_gy;
        if (lo_frac >= 0.005) current.lo_gy -= 0.5 * width;
        if (hi_frac >= 0.005) current.hi_gy += 0.5 * width;
    }

    truncate_and_normalize(posterior, options.truncate_nonnegative);
    posterior.summary = summarize(posterior, options.level);
    return posterior;
}

DosePosterior marginal_dose_monte_carlo(const CalibrationResult& calib,
                                        const TestSummary& test, const TimePrior& prior,
                                        int draws, std::uint64_t seed,
                                        const DoseGridSpec& grid,
                                        const EstimateOptions& options) {
    test.validate();
    prior.validate();
    if (draws < 10000)
        throw DomainError("Monte Carlo dose estimation needs at least 10000 draws");
    if (!(options.level > 0.0 && options.level < 1.0))
        throw DomainError("credible level must lie in (0, 1)");

    DosePosterior posterior;
    posterior.method = DoseMethod::MonteCarlo;
    if (test.small_sample())
        posterior.warnings.push_back(
            "fewer than 30 scored cells; the normal approximation for the mean "
            "count is unreliable");

    const int per_stream = (draws + kMcStreams - 1) / kMcStreams;
    std::vector<std::vector<double>> stream_draws(kMcStreams);
    std::vector<long> stream_rejects(kMcStreams, 0);

    parallel_for(kMcStreams, options.threads, [&](std::size_t s) {
        std::mt19937_64 engine = make_engine(seed, s);
        std::normal_distribution<double> unit_normal(0.0, 1.0);
        std::vector<double>& out = stream_draws[s];
        out.reserve(per_stream);
        long rejects = 0;
        while (static_cast<int>(out.size()) < per_stream) {
            const double t = time_prior_sample(prior, engine);
            const LinearCoeffs coeffs = linear_coeffs(calib, t);
            // 2x2 Cholesky of the coefficient covariance
            const double sa = std::sqrt(coeffs.covariance(0, 0));
            const double l21 = sa > 0.0 ? coeffs.covariance(0, 1) / sa : 0.0;
            const double rem = coeffs.covariance(1, 1) - l21 * l21;
            const double l22 = std::sqrt(std::max(rem, 0.0));
            const double z1 = unit_normal(engine);
            const double z2 = unit_normal(engine);
            const double alpha = coeffs.alpha + sa * z1;
            const double beta = coeffs.beta + l21 * z1 + l22 * z2;
            const double mu = test.mean + test.se * unit_normal(engine);
            if (beta <= kBetaFloor) {
                ++rejects;
                if (rejects > 1000L * per_stream + 1000)
                    throw NumericError(
                        "slope draws are almost never positive; the calibration "
                        "cannot support dose estimation at these times");
                continue;
            }
            out.push_back((mu - alpha) / beta);
        }
        stream_rejects[s] = rejects;
    });

    long total_rejects = 0;
    for (long r : stream_rejects) total_rejects += r;
    posterior.samples.reserve(static_cast<std::size_t>(per_stream) * kMcStreams);
    for (const auto& part : stream_draws)
        posterior.samples.insert(posterior.samples.end(), part.begin(), part.end());
    posterior.rejection_fraction =
        static_cast<double>(total_rejects) /
        static_cast<double>(total_rejects + posterior.samples.size());
    if (posterior.rejection_fraction > 0.01) {
        std::ostringstream warn;
        warn << "rejected " << posterior.rejection_fraction * 100.0
             << "% of draws for non-positive slope";
        posterior.warnings.push_back(warn.str());
    }

    // histogram density on the reporting grid (cells centered on grid points).
    // Widening targets the central 99.98% of draws so one extreme ratio draw
    // cannot blow the grid up; the point budget stays capped regardless.
    DoseGridSpec current = grid;
    if (current.auto_widen) {
        std::vector<double> sorted = posterior.samples;
        std::sort(sorted.begin(), sorted.end());
        const double q_lo = sorted[static_cast<std::size_t>(1e-4 * (sorted.size() - 1))];
        const double q_hi = sorted[static_cast<std::size_t>(
            (1.0 - 1e-4) * (sorted.size() - 1))];
        if (q_lo < current.lo_gy)
            current.lo_gy = std::floor(q_lo / current.step_gy) * current.step_gy;
        if (q_hi > current.hi_gy)
            current.hi_gy = std::ceil(q_hi / current.step_gy) * current.step_gy;
        const double max_points = 200000.0;
        if ((current.hi_gy - current.lo_gy) / current.step_gy > max_points)
            current.step_gy = (current.hi_gy - current.lo_gy) / max_points;
    }
    posterior.dose_grid = make_grid(current);
    posterior.density.assign(posterior.dose_grid.size(), 0.0);
    const double lo = posterior.dose_grid.front() - 0.5 * current.step_gy;
    for (double d : posterior.samples) {
        const long bin = std::lround(std::floor((d - lo) / current.step_gy));
        if (bin >= 0 && bin < static_cast<long>(posterior.density.size()))
            posterior.density[static_cast<std::size_t>(bin)] += 1.0;
    }
    for (double& f : posterior.density)
        f /= static_cast<double>(posterior.samples.size()) * current.step_gy;

    truncate_and_normalize(posterior, options.truncate_nonnegative);
    posterior.summary = summarize(posterior, options.level);
    return posterior;
}

DoseSummary summarize(const DosePosterior& posterior, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw DomainError("credible level must lie in (0, 1)");
    if (posterior.method == DoseMethod::MonteCarlo && !posterior.samples.empty())
        return summary_from_samples(posterior.samples, level);
    if (posterior.dose_grid.size() < 2)
        throw DomainError("posterior grid is empty");
    return summary_from_grid(posterior.dose_grid, posterior.density, level);
}

}  // namespace focidose
