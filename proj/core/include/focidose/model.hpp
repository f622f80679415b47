#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "focidose/types.hpp"

namespace focidose {

// Mean foci count c*t^u + a*t^v*d for one mixture component. Strictly
// positive for in-bound parameters; a non-positive value indicates malformed
// bounds and raises DomainError naming the offending parameters.
double component_mean(const ComponentParams& comp, double u, double dose_gy,
                      double time_h);

// Sum over records of log sum_k w_k Poisson(y | lambda_k(d, t)), evaluated
// with log-sum-exp so counts up to the ingestion ceiling never underflow.
// Non-finite results raise NumericError carrying the record index.
double log_likelihood(const MixtureParams& params, const CalibrationDataset& data);

// log Dirichlet(w | 1/K,...,1/K) plus the (constant, dropped) uniform box
// terms; -inf outside the boxes. With spec.perks == false the weight term is
// dropped too and the kernel reduces to the likelihood.
double log_prior(const MixtureParams& params, const PriorSpec& spec);

// Unnormalized log posterior: log_likelihood + log_prior.
double log_posterior_kernel(const MixtureParams& params,
                            const CalibrationDataset& data, const PriorSpec& spec);

// One irradiation condition in a sampling design.
struct DesignPoint {
    double dose_gy = 0.0;
    double time_h = 0.0;
    int cells = 0;
};

// Draws `cells` counts per design point from the mixture: pick a component
// with probability w_k, then draw Poisson(lambda_k(d, t)). Deterministic for
// a fixed seed.
CalibrationDataset sample_synthetic(const MixtureParams& params,
                                    const std::vector<DesignPoint>& design,
                                    std::uint64_t seed,
                                    std::string provenance = "synthetic");

// Partial derivatives of a scalar (log likelihood or log kernel) with
// respect to the original-space parameters. d_u is the per-component value;
// for a shared exponent the entries are summed by the chain rule downstream.
struct OriginalGradient {
    Eigen::VectorXd d_weights;  // K entries
    Eigen::VectorXd d_a, d_c, d_u, d_v;  // K entries each
};

// Pre-aggregated evaluation table: records collapse to unique (dose, time,
// count) cells with multiplicities, which cuts likelihood evaluation cost by
// the average cell occupancy. All methods are const and thread-safe.
class LikelihoodEvaluator {
public:
    explicit LikelihoodEvaluator(const CalibrationDataset& data);

    double log_likelihood(const MixtureParams& params) const;
    // Value plus original-space gradient in one pass over the table.
    double log_likelihood_grad(const MixtureParams& params,
                               OriginalGradient& grad) const;

    std::size_t unique_cells() const { return cells_.size(); }
    std::size_t record_count() const { return record_count_; }

private:
    struct Cell {
        double dose_gy;
        double time_h;
        int count;
        double weight;          // multiplicity
        double log_count_fact;  // lgamma(count + 1)
        std::size_t first_record;
    };
    std::vector<Cell> cells_;
    std::size_t record_count_ = 0;
};

// Sorts components by ascending a (weights permuted alongside) so that
// serialized coefficients do not depend on label switching.
MixtureParams canonical_order(MixtureParams params);

}  // namespace focidose
