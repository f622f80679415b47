#include "focidose/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "focidose/parallel.hpp"
#include "focidose/rng.hpp"
#include "focidose/specfun.hpp"

namespace focidose {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double perks_log_density(const std::vector<double>& weights) {
    const int k = static_cast<int>(weights.size());
    if (k == 1) return 0.0;
    const double conc = 1.0 / k;
    double value = -k * std::lgamma(conc);
    for (double w : weights) value += (conc - 1.0) * std::log(w);
    return value;
}

// Negative log posterior kernel and its analytic gradient in free space.
class Objective {
public:
    Objective(const LikelihoodEvaluator& eval, const FreeParametrization& map)
        : eval_(eval), map_(map) {}

    double value(const Eigen::VectorXd& x) const {
        MixtureParams params = map_.from_free(x);
        double kernel = eval_.log_likelihood(params);
        if (map_.prior().perks) kernel += perks_log_density(params.weights);
        return -kernel;
    }

    double value_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
        MixtureParams params = map_.from_free(x);
        OriginalGradient og;
        double kernel = eval_.log_likelihood_grad(params, og);
        grad = -map_.chain_gradient(params, og);
        if (map_.prior().perks) {
            kernel += perks_log_density(params.weights);
            grad -= map_.perks_gradient(params);
        }
        return -kernel;
    }

private:
    const LikelihoodEvaluator& eval_;
    const FreeParametrization& map_;
};

Eigen::VectorXd clamp_to_box(Eigen::VectorXd x, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = std::min(hi[i], std::max(lo[i], x[i]));
    return x;
}

// Gradient with bound-blocked components zeroed; its sup norm is the
// stationarity measure for the box-constrained problem.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] <= lo[i] && g[i] > 0.0) pg[i] = 0.0;
        if (x[i] >= hi[i] && g[i] < 0.0) pg[i] = 0.0;
    }
    return pg;
}

struct LocalResult {
    Eigen::VectorXd x;
    double f = kInf;
    double grad_norm = kInf;
    bool converged = false;
    int iterations = 0;
    std::string note;
};

// Dense BFGS with projected backtracking line search. Minimizes obj over the
// box [lo, hi]. The objective has ~1e4 magnitude on realistic datasets, so
// acceptance carries an absolute slack of a few ulps of f. Convergence is
// primarily on the analytic projected gradient; once gradient progress
// stalls, the objective-change tolerance decides (bound-pinned modes and
// label-switching plateaus never reach a small interior gradient).
LocalResult minimize_bfgs(const Objective& obj, Eigen::VectorXd x0,
                          const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                          const FitConfig& config) {
    const Eigen::Index p = x0.size();
    LocalResult out;
    Eigen::VectorXd x = clamp_to_box(std::move(x0), lo, hi);
    Eigen::VectorXd g(p);
    double f;
    try {
        f = obj.value_grad(x, g);
    } catch (const FociDoseError& e) {
        out.note = std::string("initial point rejected: ") + e.what();
        return out;
    }
    if (!std::isfinite(f)) {
        out.note = "objective not finite at start";
        return out;
    }

    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(p, p);
    bool scaled = false;
    int stall = 0;
    int flat_steps = 0;
    double best_pg = projected_gradient(x, g, lo, hi).lpNorm<Eigen::Infinity>();

    int iter = 0;
    for (; iter < config.max_iterations; ++iter) {
        Eigen::VectorXd pg = projected_gradient(x, g, lo, hi);
        const double pg_norm = pg.lpNorm<Eigen::Infinity>();
        if (pg_norm < config.gradient_tolerance) {
            out.converged = true;
            break;
        }
        if (pg_norm < best_pg) {
            best_pg = pg_norm;
            stall = 0;
        } else if (++stall > 40) {
            // gradient progress stopped; the objective-change criterion
            // decides (flat manifolds, modes pinned at box bounds)
            if (flat_steps >= 1) {
                out.converged = true;
                out.note = "objective change below tolerance";
            } else {
                out.note = "stalled above gradient tolerance";
            }
            break;
        }

        Eigen::VectorXd dir = -(h_inv * g);
        if (dir.dot(g) >= 0.0) {  // not a descent direction; reset curvature
            h_inv.setIdentity();
            dir = -g;
        }

        const double slack = 4e-12 * (1.0 + std::abs(f));
        double alpha = 1.0;
        double f_new = f;
        Eigen::VectorXd x_new = x;
        bool accepted = false;
        for (int ls = 0; ls < 45; ++ls) {
            Eigen::VectorXd trial = clamp_to_box(x + alpha * dir, lo, hi);
            Eigen::VectorXd step = trial - x;
            if (step.lpNorm<Eigen::Infinity>() == 0.0) break;
            double f_trial;
            try {
                f_trial = obj.value(trial);
            } catch (const FociDoseError&) {
                alpha *= 0.5;
                continue;
            }
            if (std::isfinite(f_trial) &&
                f_trial <= f + 1e-4 * g.dot(step) + slack) {
                x_new = std::move(trial);
                f_new = f_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (flat_steps >= 1) {
                out.converged = true;
                out.note = "objective change below tolerance";
            } else {
                out.note = "line search could not make progress";
            }
            break;
        }

        Eigen::VectorXd g_new(p);
        try {
            double f_check = obj.value_grad(x_new, g_new);
            f_new = f_check;
        } catch (const FociDoseError& e) {
            out.note = std::string("gradient failed mid-run: ") + e.what();
            break;
        }
        if (std::abs(f_new - f) <=
            config.objective_tolerance * (1.0 + std::abs(f)))
            ++flat_steps;
        else
            flat_steps = 0;

        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                h_inv *= sy / y.squaredNorm();
                scaled = true;
            }
            // BFGS inverse update
            Eigen::VectorXd hy = h_inv * y;
            const double yhy = y.dot(hy);
            h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
                     (hy * s.transpose() + s * hy.transpose()) / sy;
        }
        x = std::move(x_new);
        g = std::move(g_new);
        f = f_new;
    }

    out.x = x;
    out.f = f;
    out.grad_norm = projected_gradient(x, g, lo, hi).lpNorm<Eigen::Infinity>();
    out.iterations = iter;
    if (!out.converged) out.converged = out.grad_norm < config.gradient_tolerance;
    return out;
}

struct SurfaceGuess {
    double a = 1.0;
    double c = 1.0;
};

// Pooled linear regression of counts on dose; crude but a dependable basin
// for the warm start.
SurfaceGuess guess_surface(const CalibrationDataset& data) {
    double sum_d = 0, sum_y = 0, sum_dd = 0, sum_dy = 0;
    const double n = static_cast<double>(data.size());
    for (const FociRecord& r : data.records()) {
        sum_d += r.dose_gy;
        sum_y += r.count;
        sum_dd += r.dose_gy * r.dose_gy;
        sum_dy += r.dose_gy * r.count;
    }
    const double var_d = sum_dd / n - (sum_d / n) * (sum_d / n);
    SurfaceGuess guess;
    if (var_d > 0.0) {
        guess.a = (sum_dy / n - (sum_d / n) * (sum_y / n)) / var_d;
        guess.c = sum_y / n - guess.a * (sum_d / n);
    } else {
        guess.c = sum_y / n;
    }
    guess.a = std::max(guess.a, 0.05);
    guess.c = std::max(guess.c, 0.05);
    return guess;
}

Eigen::VectorXd warm_start(const FreeParametrization& map, const SurfaceGuess& guess) {
    const int k = map.k();
    MixtureParams params;
    params.shared_u = map.shared_u();
    params.weights.assign(k, 1.0 / k);
    params.components.resize(k);
    for (int j = 0; j < k; ++j) {
        const double spread =
            k == 1 ? 0.0 : -0.6 + 1.2 * static_cast<double>(j) / (k - 1);
        params.components[j].a = guess.a * std::exp(spread);
        params.components[j].c = guess.c * std::exp(spread);
        params.components[j].v = 0.0;
        params.components[j].u = 0.0;
    }
    params.u = 0.0;
    return map.to_free(params);
}

// Latin hypercube design: n rows over [lo, hi]^p with one stratum per row
// and coordinate, independently permuted.
std::vector<Eigen::VectorXd> latin_hypercube(int n, const Eigen::VectorXd& lo,
                                             const Eigen::VectorXd& hi,
                                             std::mt19937_64& engine) {
    const Eigen::Index p = lo.size();
    std::vector<Eigen::VectorXd> points(n, Eigen::VectorXd(p));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> strata(n);
    for (Eigen::Index i = 0; i < p; ++i) {
        std::iota(strata.begin(), strata.end(), 0);
        std::shuffle(strata.begin(), strata.end(), engine);
        for (int row = 0; row < n; ++row) {
            const double frac = (strata[row] + unit(engine)) / n;
            points[row][i] = lo[i] + frac * (hi[i] - lo[i]);
        }
    }
    return points;
}

}  // namespace

double aic(double log_likelihood_at_mode, int p) {
    if (p < 1) throw DomainError("aic requires p >= 1");
    return 2.0 * p - 2.0 * log_likelihood_at_mode;
}

ModeFit fit_map(const CalibrationDataset& data, int k, bool shared_u,
                const FitConfig& config, const PriorSpec& spec) {
    if (k < 1) throw DomainError("fit_map requires K >= 1");
    if (config.starts < 1) throw DomainError("fit_map requires at least one start");
    spec.validate();

    const FreeParametrization map(k, shared_u, spec);
    const LikelihoodEvaluator eval(data);
    const Objective obj(eval, map);
    const Eigen::VectorXd lo = map.lower();
    const Eigen::VectorXd hi = map.upper();

    // Data-informed sampling box for half the random starts: within +-2.5
    // nats of the pooled regression guess, exponents in the kinetically
    // plausible range. The other half explores the full transformed box.
    const SurfaceGuess guess = guess_surface(data);
    Eigen::VectorXd informed_lo = lo, informed_hi = hi;
    {
        int at = k - 1;
        for (int j = 0; j < k; ++j) {
            const int block = shared_u ? 3 : 4;
            informed_lo[at] = std::max(lo[at], std::log(guess.a) - 2.5);
            informed_hi[at] = std::min(hi[at], std::log(guess.a) + 2.5);
            informed_lo[at + 1] = std::max(lo[at + 1], std::log(guess.c) - 2.5);
            informed_hi[at + 1] = std::min(hi[at + 1], std::log(guess.c) + 2.5);
            informed_lo[at + 2] = std::max(lo[at + 2], -2.0);
            informed_hi[at + 2] = std::min(hi[at + 2], 1.0);
            if (!shared_u) {
                informed_lo[at + 3] = std::max(lo[at + 3], -2.0);
                informed_hi[at + 3] = std::min(hi[at + 3], 1.0);
            }
            at += block;
        }
        if (shared_u) {
            informed_lo[at] = std::max(lo[at], -2.0);
            informed_hi[at] = std::min(hi[at], 1.0);
        }
        for (int j = 0; j < k - 1; ++j) {
            informed_lo[j] = -2.0;
            informed_hi[j] = 2.0;
        }
    }

    std::vector<Eigen::VectorXd> starts;
    starts.reserve(config.starts);
    starts.push_back(warm_start(map, guess));
    if (config.starts > 1) {
        const int n_random = config.starts - 1;
        const int n_informed = (n_random + 1) / 2;
        const int n_full = n_random - n_informed;
        std::mt19937_64 engine = make_engine(config.seed, 0x5ca1ab1e);
        auto informed = latin_hypercube(std::max(n_informed, 1), informed_lo,
                                        informed_hi, engine);
        auto full = latin_hypercube(std::max(n_full, 1), lo, hi, engine);
        for (int i = 0; i < n_informed; ++i) starts.push_back(informed[i]);
        for (int i = 0; i < n_full; ++i) starts.push_back(full[i]);
    }

    std::vector<LocalResult> results(starts.size());
    parallel_for(starts.size(), config.threads, [&](std::size_t i) {
        results[i] = minimize_bfgs(obj, starts[i], lo, hi, config);
    });

    // Rank converged starts by value and keep the first stationary point with
    // a positive definite Hessian: the objective-change criterion can accept
    // saddle points on label-switching plateaus, and those are not maxima.
    std::vector<int> ranked;
    for (std::size_t i = 0; i < results.size(); ++i)
        if (results[i].converged) ranked.push_back(static_cast<int>(i));
    std::sort(ranked.begin(), ranked.end(),
              [&](int lhs, int rhs) { return results[lhs].f < results[rhs].f; });

    auto hessian_is_pd = [&](const Eigen::VectorXd& at) {
        try {
            const Eigen::MatrixXd hess = numeric_hessian(
                [&](const Eigen::VectorXd& v) { return obj.value(v); }, at,
                config.hessian_step);
            return Eigen::LLT<Eigen::MatrixXd>(hess).info() == Eigen::Success;
        } catch (const FociDoseError&) {
            return false;
        }
    };
    int best = -1;
    bool best_pd = false;
    int saddles_skipped = 0;
    for (int idx : ranked) {
        if (hessian_is_pd(results[idx].x)) {
            best = idx;
            best_pd = true;
            break;
        }
        ++saddles_skipped;
    }
    if (best < 0 && !ranked.empty()) {
        // no candidate with usable curvature (degenerate modes pinned at the
        // weight cap); keep the best value so model comparison can proceed
        best = ranked.front();
        saddles_skipped = 0;
    }

    ModeFit fit;
    for (std::size_t i = 0; i < results.size(); ++i) {
        StartDiagnostic diag;
        diag.start = static_cast<int>(i);
        diag.converged = results[i].converged;
        diag.iterations = results[i].iterations;
        diag.log_posterior = -results[i].f;
        diag.note = results[i].note;
        fit.diagnostics.push_back(std::move(diag));
    }
    if (best < 0) {
        std::ostringstream msg;
        msg << "no start converged (" << starts.size() << " attempted):";
        for (const StartDiagnostic& d : fit.diagnostics)
            msg << "\n  start " << d.start << ": iterations " << d.iterations
                << ", value " << d.log_posterior << (d.note.empty() ? "" : ", " + d.note);
        throw CalibrationError(msg.str());
    }

    const LocalResult& winner = results[best];
    MixtureParams params = canonical_order(map.from_free(winner.x));
    fit.params = params;
    fit.free_mode = map.to_free(params);
    fit.log_posterior = -winner.f;
    fit.log_likelihood = eval.log_likelihood(params);
    fit.gradient_norm = winner.grad_norm;

    for (int j = 0; j < k; ++j) {
        if (params.weights[j] < 1e-4) {
            std::ostringstream warn;
            warn << "component " << j + 1 << " has weight " << params.weights[j]
                 << "; K may exceed what the data identify";
            fit.warnings.push_back(warn.str());
        }
    }
    if (!best_pd)
        fit.warnings.push_back(
            "no converged start has a positive definite Hessian; the best value "
            "is reported but the Gaussian approximation will not hold");
    if (saddles_skipped > 0)
        fit.warnings.push_back(std::to_string(saddles_skipped) +
                               " better-valued stationary points were saddles and "
                               "were skipped");
    const double bound_eps = 1e-6;
    const std::vector<std::string> names = map.parameter_order();
    for (Eigen::Index i = 0; i < fit.free_mode.size(); ++i) {
        const double width = hi[i] - lo[i];
        if (fit.free_mode[i] - lo[i] < bound_eps * width ||
            hi[i] - fit.free_mode[i] < bound_eps * width)
            fit.warnings.push_back("parameter " + names[i] + " sits at a box bound");
    }
    int failures = 0;
    for (const StartDiagnostic& d : fit.diagnostics)
        if (!d.converged) ++failures;
    if (failures > 0)
        fit.warnings.push_back(std::to_string(failures) + " of " +
                               std::to_string(starts.size()) +
                               " starts did not converge");
    return fit;
}

Eigen::MatrixXd numeric_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& x, double rel_step) {
    const Eigen::Index p = x.size();
    Eigen::VectorXd h(p);
    for (Eigen::Index i = 0; i < p; ++i)
        h[i] = rel_step * std::max(1.0, std::abs(x[i]));

    Eigen::MatrixXd hess(p, p);
    const double f0 = f(x);
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < p; ++i) {
        probe[i] = x[i] + h[i];
        const double fp = f(probe);
        probe[i] = x[i] - h[i];
        const double fm = f(probe);
        probe[i] = x[i];
        hess(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            probe[i] = x[i] + h[i];
            probe[j] = x[j] + h[j];
            const double fpp = f(probe);
            probe[j] = x[j] - h[j];
            const double fpm = f(probe);
            probe[i] = x[i] - h[i];
            const double fmm = f(probe);
            probe[j] = x[j] + h[j];
            const double fmp = f(probe);
            probe[i] = x[i];
            probe[j] = x[j];
            const double value = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess(i, j) = value;
            hess(j, i) = value;
        }
    }

    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (!std::isfinite(hess(i, j))) {
                std::ostringstream msg;
                msg << "non-finite Hessian entry at coordinate pair (" << i << ", "
                    << j << ")";
                throw NumericError(msg.str());
            }
    return 0.5 * (hess + hess.transpose());
}

Eigen::MatrixXd hessian_at_mode(const CalibrationDataset& data, const ModeFit& mode,
                                const PriorSpec& spec, const FitConfig& config) {
    const FreeParametrization map(mode.params.k(), mode.params.shared_u, spec);
    const LikelihoodEvaluator eval(data);
    const Objective obj(eval, map);
    auto f = [&](const Eigen::VectorXd& x) { return obj.value(x); };
    return numeric_hessian(f, mode.free_mode, config.hessian_step);
}

CalibrationResult laplace_approx(const CalibrationDataset& data, const ModeFit& mode,
                                 const PriorSpec& spec, const FitConfig& config) {
    Eigen::MatrixXd hess = hessian_at_mode(data, mode, spec, config);
    Eigen::MatrixXd covariance;
    try {
        covariance = specfun::invert_spd(hess);
    } catch (const NumericError& e) {
        throw CalibrationError(
            std::string("Hessian at the mode is not positive definite (") + e.what() +
            "); the mode search likely failed, re-run with more starts");
    }

    const FreeParametrization map(mode.params.k(), mode.params.shared_u, spec);
    CalibrationResult result;
    result.params = mode.params;
    result.free_mode = mode.free_mode;
    result.covariance = std::move(covariance);
    result.parameter_order = map.parameter_order();
    result.log_posterior_at_mode = mode.log_posterior;
    result.log_likelihood_at_mode = mode.log_likelihood;
    result.aic = aic(mode.log_likelihood, map.dim());
    result.k = mode.params.k();
    result.shared_u = mode.params.shared_u;
    result.data_digest = data.digest();
    result.warnings = mode.warnings;
    result.prior = spec;
    return result;
}

ModelSelection select_model(const CalibrationDataset& data, const std::vector<int>& ks,
                            UMode u_mode, const FitConfig& config,
                            const PriorSpec& spec) {
    if (ks.empty()) throw DomainError("select_model needs at least one candidate K");

    std::vector<std::pair<int, bool>> candidates;
    for (int k : ks) {
        if (u_mode == UMode::Shared || u_mode == UMode::Both)
            candidates.emplace_back(k, true);
        // K = 1 has a single intercept exponent either way
        if ((u_mode == UMode::PerComponent || u_mode == UMode::Both) && k > 1)
            candidates.emplace_back(k, false);
        if (u_mode == UMode::PerComponent && k == 1) candidates.emplace_back(k, true);
    }

    ModelSelection selection;
    std::vector<std::optional<CalibrationResult>> fits(candidates.size());
    selection.table.resize(candidates.size());

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto [k, shared] = candidates[i];
        ModelCandidate& row = selection.table[i];
        row.k = k;
        row.shared_u = shared;
        row.p = free_parameter_count(k, shared);
        try {
            ModeFit mode = fit_map(data, k, shared, config, spec);
            row.aic = aic(mode.log_likelihood, row.p);
            row.log_likelihood = mode.log_likelihood;
            row.has_aic = true;
            CalibrationResult fit = laplace_approx(data, mode, spec, config);
            row.ok = true;
            fits[i] = std::move(fit);
        } catch (const FociDoseError& e) {
            row.error = e.what();
        }
    }

    int best = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!selection.table[i].ok) continue;
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        const ModelCandidate& cur = selection.table[i];
        const ModelCandidate& win = selection.table[best];
        const bool better = cur.aic < win.aic ||
                            (cur.aic == win.aic && cur.p < win.p) ||
                            (cur.aic == win.aic && cur.p == win.p && cur.k < win.k);
        if (better) best = static_cast<int>(i);
    }
    if (best < 0) {
        std::ostringstream msg;
        msg << "every candidate fit failed:";
        for (const ModelCandidate& row : selection.table)
            msg << "\n  K=" << row.k << (row.shared_u ? " shared-u" : " per-component-u")
                << ": " << row.error;
        throw CalibrationError(msg.str());
    }
    selection.best = std::move(*fits[best]);
    return selection;
}

}  // namespace focidose
