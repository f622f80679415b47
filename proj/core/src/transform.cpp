#include "focidose/transform.hpp"

#include <algorithm>
#include <cmath>

namespace focidose {

FreeParametrization::FreeParametrization(int k, bool shared_u, PriorSpec prior,
                                         double alr_bound)
    : k_(k), shared_u_(shared_u), prior_(std::move(prior)), alr_bound_(alr_bound),
      comp_block_(shared_u ? 3 : 4) {
    if (k < 1) throw DomainError("mixture size K must be >= 1");
    prior_.validate();
}

std::vector<std::string> FreeParametrization::parameter_order() const {
    std::vector<std::string> names;
    names.reserve(dim());
    for (int j = 1; j < k_; ++j) names.push_back("alr_omega_" + std::to_string(j));
    for (int j = 1; j <= k_; ++j) {
        names.push_back("log_a_" + std::to_string(j));
        names.push_back("log_c_" + std::to_string(j));
        names.push_back("v_" + std::to_string(j));
        if (!shared_u_) names.push_back("u_" + std::to_string(j));
    }
    if (shared_u_) names.push_back("u");
    return names;
}

Eigen::VectorXd FreeParametrization::to_free(const MixtureParams& params) const {
    params.validate();
    if (params.k() != k_ || params.shared_u != shared_u_)
        throw DomainError("mixture shape does not match this parametrization");
    Eigen::VectorXd x(dim());
    int at = 0;
    const double log_wk = std::log(params.weights[k_ - 1]);
    for (int j = 0; j < k_ - 1; ++j)
        x[at++] = std::log(params.weights[j]) - log_wk;
    for (int j = 0; j < k_; ++j) {
        const ComponentParams& comp = params.components[j];
        x[at++] = std::log(comp.a);
        x[at++] = std::log(comp.c);
        x[at++] = comp.v;
        if (!shared_u_) x[at++] = comp.u;
    }
    if (shared_u_) x[at++] = params.u;
    return x;
}

MixtureParams FreeParametrization::from_free(const Eigen::VectorXd& x) const {
    if (x.size() != dim())
        throw DomainError("free vector has length " + std::to_string(x.size()) +
                          ", expected " + std::to_string(dim()));
    MixtureParams params;
    params.shared_u = shared_u_;
    params.weights.resize(k_);
    params.components.resize(k_);

    // softmax over (x_0..x_{K-2}, 0), shifted for overflow safety
    double max_z = 0.0;
    for (int j = 0; j < k_ - 1; ++j) max_z = std::max(max_z, x[j]);
    double denom = std::exp(0.0 - max_z);
    for (int j = 0; j < k_ - 1; ++j) denom += std::exp(x[j] - max_z);
    for (int j = 0; j < k_ - 1; ++j) params.weights[j] = std::exp(x[j] - max_z) / denom;
    params.weights[k_ - 1] = std::exp(0.0 - max_z) / denom;

    int at = k_ - 1;
    for (int j = 0; j < k_; ++j) {
        ComponentParams& comp = params.components[j];
        comp.a = std::exp(x[at++]);
        comp.c = std::exp(x[at++]);
        comp.v = x[at++];
        if (!shared_u_) comp.u = x[at++];
    }
    if (shared_u_) {
        params.u = x[at++];
        for (ComponentParams& comp : params.components) comp.u = params.u;
    }
    return params;
}

Eigen::VectorXd FreeParametrization::lower() const {
    Eigen::VectorXd lo(dim());
    int at = 0;
    for (int j = 0; j < k_ - 1; ++j) lo[at++] = -alr_bound_;
    for (int j = 0; j < k_; ++j) {
        lo[at++] = std::log(prior_.a_box.lo);
        lo[at++] = std::log(prior_.c_box.lo);
        lo[at++] = prior_.v_box.lo;
        if (!shared_u_) lo[at++] = prior_.u_box.lo;
    }
    if (shared_u_) lo[at++] = prior_.u_box.lo;
    return lo;
}

Eigen::VectorXd FreeParametrization::upper() const {
    Eigen::VectorXd hi(dim());
    int at = 0;
    for (int j = 0; j < k_ - 1; ++j) hi[at++] = alr_bound_;
    for (int j = 0; j < k_; ++j) {
        hi[at++] = std::log(prior_.a_box.hi);
        hi[at++] = std::log(prior_.c_box.hi);
        hi[at++] = prior_.v_box.hi;
        if (!shared_u_) hi[at++] = prior_.u_box.hi;
    }
    if (shared_u_) hi[at++] = prior_.u_box.hi;
    return hi;
}

Eigen::VectorXd FreeParametrization::chain_gradient(const MixtureParams& params,
                                                    const OriginalGradient& grad) const {
    Eigen::VectorXd g(dim());
    int at = 0;
    // d w_k / d alr_j = w_k (delta_kj - w_j); fold the full weight gradient
    for (int j = 0; j < k_ - 1; ++j) {
        double dot = 0.0;
        for (int m = 0; m < k_; ++m) dot += grad.d_weights[m] * params.weights[m];
        g[at++] = params.weights[j] * (grad.d_weights[j] - dot);
    }
    for (int j = 0; j < k_; ++j) {
        const ComponentParams& comp = params.components[j];
        g[at++] = grad.d_a[j] * comp.a;  // d/d log a
        g[at++] = grad.d_c[j] * comp.c;  // d/d log c
        g[at++] = grad.d_v[j];
        if (!shared_u_) g[at++] = grad.d_u[j];
    }
    if (shared_u_) g[at++] = grad.d_u.sum();
    return g;
}

Eigen::VectorXd FreeParametrization::perks_gradient(const MixtureParams& params) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    if (!prior_.perks || k_ == 1) return g;
    const double conc = 1.0 / k_;
    // d/d alr_j of (conc-1) * sum_k log w_k = (conc-1) * (1 - K w_j)
    for (int j = 0; j < k_ - 1; ++j)
        g[j] = (conc - 1.0) * (1.0 - k_ * params.weights[j]);
    return g;
}

}  // namespace focidose
