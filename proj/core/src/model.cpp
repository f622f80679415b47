#include "focidose/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "focidose/rng.hpp"

namespace focidose {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double perks_log_density(const std::vector<double>& weights) {
    const int k = static_cast<int>(weights.size());
    if (k == 1) return 0.0;
    const double conc = 1.0 / k;
    // log Gamma(sum conc) - sum log Gamma(conc) + sum (conc - 1) log w
    double value = std::lgamma(1.0) - k * std::lgamma(conc);
    for (double w : weights) value += (conc - 1.0) * std::log(w);
    return value;
}

}  // namespace

double component_mean(const ComponentParams& comp, double u, double dose_gy,
                      double time_h) {
    if (!(time_h > 0.0))
        throw DomainError("component_mean requires time > 0 h, got " +
                          std::to_string(time_h));
    if (!(dose_gy >= 0.0))
        throw DomainError("component_mean requires dose >= 0 Gy, got " +
                          std::to_string(dose_gy));
    const double mean =
        comp.c * std::pow(time_h, u) + comp.a * std::pow(time_h, comp.v) * dose_gy;
    if (!(mean > 0.0) || !std::isfinite(mean)) {
        std::ostringstream msg;
        msg << "non-positive component mean " << mean << " from a=" << comp.a
            << " c=" << comp.c << " u=" << u << " v=" << comp.v << " at d=" << dose_gy
            << " t=" << time_h;
        throw DomainError(msg.str());
    }
    return mean;
}

LikelihoodEvaluator::LikelihoodEvaluator(const CalibrationDataset& data) {
    std::map<std::tuple<double, double, int>, std::size_t> index;
    record_count_ = data.size();
    for (std::size_t i = 0; i < data.records().size(); ++i) {
        const FociRecord& r = data.records()[i];
        auto key = std::make_tuple(r.dose_gy, r.time_h, r.count);
        auto [it, inserted] = index.try_emplace(key, cells_.size());
        if (inserted) {
            cells_.push_back({r.dose_gy, r.time_h, r.count, 1.0,
                              std::lgamma(static_cast<double>(r.count) + 1.0), i});
        } else {
            cells_[it->second].weight += 1.0;
        }
    }
}

double LikelihoodEvaluator::log_likelihood(const MixtureParams& params) const {
    params.validate();
    const int k = params.k();
    std::vector<double> log_w(k), terms(k);
    for (int j = 0; j < k; ++j) log_w[j] = std::log(params.weights[j]);

    double total = 0.0;
    for (const Cell& cell : cells_) {
        double best = kNegInf;
        for (int j = 0; j < k; ++j) {
            const double lambda = component_mean(params.components[j],
                                                 params.component_u(j), cell.dose_gy,
                                                 cell.time_h);
            const double log_pmf =
                cell.count * std::log(lambda) - lambda - cell.log_count_fact;
            terms[j] = log_w[j] + log_pmf;
            best = std::max(best, terms[j]);
        }
        // summed in value order so the result is exactly invariant under
        // component relabeling
        std::sort(terms.begin(), terms.end());
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(terms[j] - best);
        const double cell_ll = best + std::log(sum);
        if (!std::isfinite(cell_ll)) {
            std::ostringstream msg;
            msg << "non-finite log-likelihood contribution at record "
                << cell.first_record + 1 << " (d=" << cell.dose_gy
                << ", t=" << cell.time_h << ", y=" << cell.count << ")";
            throw NumericError(msg.str());
        }
        total += cell.weight * cell_ll;
    }
    return total;
}

double LikelihoodEvaluator::log_likelihood_grad(const MixtureParams& params,
                                                OriginalGradient& grad) const {
    params.validate();
    const int k = params.k();
    grad.d_weights = Eigen::VectorXd::Zero(k);
    grad.d_a = Eigen::VectorXd::Zero(k);
    grad.d_c = Eigen::VectorXd::Zero(k);
    grad.d_u = Eigen::VectorXd::Zero(k);
    grad.d_v = Eigen::VectorXd::Zero(k);

    std::vector<double> log_w(k), terms(k), sorted(k), lambda(k), ct_u(k), at_v(k);
    for (int j = 0; j < k; ++j) log_w[j] = std::log(params.weights[j]);

    double total = 0.0;
    for (const Cell& cell : cells_) {
        const double log_t = std::log(cell.time_h);
        double best = kNegInf;
        for (int j = 0; j < k; ++j) {
            const ComponentParams& comp = params.components[j];
            ct_u[j] = comp.c * std::pow(cell.time_h, params.component_u(j));
            at_v[j] = comp.a * std::pow(cell.time_h, comp.v) * cell.dose_gy;
            lambda[j] = ct_u[j] + at_v[j];
            if (!(lambda[j] > 0.0)) {
                std::ostringstream msg;
                msg << "non-positive mixture mean at record " << cell.first_record + 1;
                throw NumericError(msg.str());
            }
            const double log_pmf =
                cell.count * std::log(lambda[j]) - lambda[j] - cell.log_count_fact;
            terms[j] = log_w[j] + log_pmf;
            best = std::max(best, terms[j]);
        }
        // same order-canonical summation as the value-only path
        sorted.assign(terms.begin(), terms.end());
        std::sort(sorted.begin(), sorted.end());
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(sorted[j] - best);
        for (int j = 0; j < k; ++j) terms[j] = std::exp(terms[j] - best);
        const double cell_ll = best + std::log(sum);
        if (!std::isfinite(cell_ll)) {
            std::ostringstream msg;
            msg << "non-finite log-likelihood contribution at record "
                << cell.first_record + 1;
            throw NumericError(msg.str());
        }
        total += cell.weight * cell_ll;

        for (int j = 0; j < k; ++j) {
            const double resp = terms[j] / sum;  // component responsibility
            const double dl_dlambda =
                resp * (cell.count / lambda[j] - 1.0) * cell.weight;
            // d lambda / d{a, c, u, v} in original space
            grad.d_a[j] += dl_dlambda * at_v[j] / params.components[j].a;
            grad.d_c[j] += dl_dlambda * ct_u[j] / params.components[j].c;
            grad.d_u[j] += dl_dlambda * ct_u[j] * log_t;
            grad.d_v[j] += dl_dlambda * at_v[j] * log_t;
            // d logL / d w_j holding other weights fixed (simplex handled by
            // the transform layer): pmf_j / mixture = resp / w_j
            grad.d_weights[j] += cell.weight * resp / params.weights[j];
        }
    }
    return total;
}

double log_likelihood(const MixtureParams& params, const CalibrationDataset& data) {
    return LikelihoodEvaluator(data).log_likelihood(params);
}

double log_prior(const MixtureParams& params, const PriorSpec& spec) {
    params.validate();
    spec.validate();
    try {
        check_bounds(params, spec);
    } catch (const BoundaryError&) {
        return kNegInf;
    }
    return spec.perks ? perks_log_density(params.weights) : 0.0;
}

double log_posterior_kernel(const MixtureParams& params,
                            const CalibrationDataset& data, const PriorSpec& spec) {
    const double prior = log_prior(params, spec);
    if (prior == kNegInf) return kNegInf;
    return log_likelihood(params, data) + prior;
}

CalibrationDataset sample_synthetic(const MixtureParams& params,
                                    const std::vector<DesignPoint>& design,
                                    std::uint64_t seed, std::string provenance) {
    params.validate();
    std::mt19937_64 engine = make_engine(seed);
    std::discrete_distribution<int> pick(params.weights.begin(), params.weights.end());

    std::vector<FociRecord> records;
    for (const DesignPoint& point : design) {
        if (point.cells < 0) throw DomainError("design cell count must be >= 0");
        for (int cell = 0; cell < point.cells; ++cell) {
            const int j = pick(engine);
            const double lambda = component_mean(params.components[j],
                                                 params.component_u(j), point.dose_gy,
                                                 point.time_h);
            std::poisson_distribution<int> poisson(lambda);
            records.push_back({point.dose_gy, point.time_h, poisson(engine)});
        }
    }
    return CalibrationDataset(std::move(records), std::move(provenance),
                              std::numeric_limits<int>::max());
}

MixtureParams canonical_order(MixtureParams params) {
    const int k = params.k();
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
        return params.components[lhs].a < params.components[rhs].a;
    });
    MixtureParams sorted = params;
    for (int j = 0; j < k; ++j) {
        sorted.components[j] = params.components[order[j]];
        sorted.weights[j] = params.weights[order[j]];
    }
    return sorted;
}

}  // namespace focidose
