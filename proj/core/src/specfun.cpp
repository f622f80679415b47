#include "focidose/specfun.hpp"

#include <cmath>
#include <sstream>

namespace focidose::specfun {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

double erf(double x) {
    // libm's rational-approximation erf is good to < 1 ulp, far inside the
    // 1e-12 budget; tests pin it against an independent quadrature oracle.
    return std::erf(x);
}

double log_kummer_1f1_half(double z) {
    if (!(z >= 0.0))
        throw DomainError("kummer_1f1_half requires z >= 0, got " + std::to_string(z));
    if (z == 0.0) return 0.0;
    double s = std::sqrt(z);
    // log of exp(z)*sqrt(pi*z)*erf(sqrt(z)); erf underflow is impossible here
    // and log(erf) ~ 0 once s > 6.
    double big = z + 0.5 * std::log(kPi * z) + std::log(erf(s));
    // log(exp(big) + 1), stable on both sides
    return big > 0.0 ? big + std::log1p(std::exp(-big)) : std::log1p(std::exp(big));
}

double kummer_1f1_half(double z) {
    if (!(z >= 0.0))
        throw DomainError("kummer_1f1_half requires z >= 0, got " + std::to_string(z));
    if (z > 700.0) return std::exp(log_kummer_1f1_half(z));
    double s = std::sqrt(z);
    return std::exp(z) * std::sqrt(kPi) * s * erf(s) + 1.0;
}

void BivariateNormalSpec::validate() const {
    if (!(sigma_x > 0.0) || !std::isfinite(sigma_x))
        throw DomainError("sigma_x must be a positive finite value");
    if (!(sigma_y > 0.0) || !std::isfinite(sigma_y))
        throw DomainError("sigma_y must be a positive finite value");
    if (!(std::abs(rho) < 1.0))
        throw DomainError("rho must lie strictly inside (-1, 1)");
    if (!std::isfinite(mu_x) || !std::isfinite(mu_y))
        throw DomainError("means must be finite");
}

double log_ratio_normal_pdf(double w, const BivariateNormalSpec& spec) {
    spec.validate();
    const double sx = spec.sigma_x, sy = spec.sigma_y, rho = spec.rho;
    const double vx = sx * sx, vy = sy * sy;
    const double one_minus_r2 = (1.0 - rho) * (1.0 + rho);

    const double denom = vy * w * w - 2.0 * rho * sx * sy * w + vx;
    const double lin = -vy * spec.mu_x * w + rho * sx * sy * (spec.mu_y * w + spec.mu_x) -
                       spec.mu_y * vx;
    const double theta2 = (lin * lin) / (2.0 * vx * vy * one_minus_r2 * denom);

    // log K2 split into its log-normalizer and exponent parts
    const double quad_mu = vy * spec.mu_x * spec.mu_x -
                           2.0 * rho * sx * sy * spec.mu_x * spec.mu_y +
                           spec.mu_y * spec.mu_y * vx;
    const double log_k2 = -kLog2Pi - std::log(sx * sy) - 0.5 * std::log(one_minus_r2) -
                          quad_mu / (2.0 * one_minus_r2 * vx * vy);

    const double log_f = log_k2 + std::log(2.0 * one_minus_r2 * vx * vy) -
                         std::log(denom) + log_kummer_1f1_half(theta2);
    if (std::isnan(log_f)) {
        std::ostringstream msg;
        msg << "ratio density evaluation produced NaN at w = " << w;
        throw NumericError(msg.str());
    }
    return log_f;
}

double ratio_normal_pdf(double w, const BivariateNormalSpec& spec) {
    double f = std::exp(log_ratio_normal_pdf(w, spec));
    if (!std::isfinite(f)) {
        std::ostringstream msg;
        msg << "ratio density overflowed at w = " << w;
        throw NumericError(msg.str());
    }
    return f;
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a, double rel_ridge) {
    if (a.rows() != a.cols()) throw DomainError("invert_spd needs a square matrix");
    const Eigen::Index p = a.rows();
    Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    if (rel_ridge > 0.0) {
        double ridge = rel_ridge * sym.diagonal().mean();
        sym.diagonal().array() += ridge;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym,
                                                           Eigen::EigenvaluesOnly);
        std::ostringstream msg;
        msg << "matrix is not positive definite (smallest eigenvalue ~ "
            << eig.eigenvalues().minCoeff() << ")";
        throw NumericError(msg.str());
    }

    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(p, p));

    // Newton polish X <- X + X(I - AX); residual accumulated in long double
    // so the correction is meaningful even for badly conditioned input.
    auto residual = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd r(p, p);
        for (Eigen::Index i = 0; i < p; ++i) {
            for (Eigen::Index j = 0; j < p; ++j) {
                long double acc = (i == j) ? 1.0L : 0.0L;
                for (Eigen::Index m = 0; m < p; ++m)
                    acc -= static_cast<long double>(sym(i, m)) *
                           static_cast<long double>(x(m, j));
                r(i, j) = static_cast<double>(acc);
            }
        }
        return r;
    };

    double best_norm = residual(inv).cwiseAbs().maxCoeff();
    for (int iter = 0; iter < 3 && best_norm > 1e-14; ++iter) {
        Eigen::MatrixXd r = residual(inv);
        Eigen::MatrixXd candidate = inv + inv * r;
        candidate = 0.5 * (candidate + candidate.transpose()).eval();
        double norm = residual(candidate).cwiseAbs().maxCoeff();
        if (norm >= best_norm) break;
        inv = candidate;
        best_norm = norm;
    }
    return 0.5 * (inv + inv.transpose());
}

}  // namespace focidose::specfun
