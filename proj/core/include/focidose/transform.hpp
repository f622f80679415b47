#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "focidose/model.hpp"
#include "focidose/types.hpp"

namespace focidose {

// Bijection between MixtureParams and the unconstrained optimizer space.
// Coordinate layout (the parameter-order contract serialized in artifacts):
//   alr_omega_1 .. alr_omega_{K-1}   log weight ratios against the last weight
//   per component k: log_a_k, log_c_k, v_k [, u_k when not shared]
//   u                                 shared intercept exponent (last, if shared)
// a and c travel in log space; the exponents keep their own scale inside the
// configured boxes. Weight ratios are capped at +-alr_bound so a vanishing
// component cannot drag the optimizer to infinity.
class FreeParametrization {
public:
    FreeParametrization(int k, bool shared_u, PriorSpec prior = {},
                        double alr_bound = 16.0);

    int k() const { return k_; }
    bool shared_u() const { return shared_u_; }
    int dim() const { return free_parameter_count(k_, shared_u_); }
    const PriorSpec& prior() const { return prior_; }

    std::vector<std::string> parameter_order() const;

    Eigen::VectorXd to_free(const MixtureParams& params) const;
    MixtureParams from_free(const Eigen::VectorXd& x) const;

    // Transformed box: optimizer iterates stay inside [lower(), upper()].
    Eigen::VectorXd lower() const;
    Eigen::VectorXd upper() const;

    // Chain rule: free-space gradient from original-space partials at params.
    Eigen::VectorXd chain_gradient(const MixtureParams& params,
                                   const OriginalGradient& grad) const;

    // Gradient of the Perks weight prior in free coordinates (zero vector when
    // the prior is flat or K == 1).
    Eigen::VectorXd perks_gradient(const MixtureParams& params) const;

private:
    int k_;
    bool shared_u_;
    PriorSpec prior_;
    double alr_bound_;
    int comp_block_;  // free coords per component
};

}  // namespace focidose
