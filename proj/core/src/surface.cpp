#include "focidose/surface.hpp"

#include <cmath>
#include <sstream>

#include "focidose/transform.hpp"

namespace focidose {

namespace {

void check_order(const CalibrationResult& calib, const FreeParametrization& map) {
    if (map.parameter_order() != calib.parameter_order)
        throw NumericError(
            "calibration parameter order does not match the current "
            "parametrization; refusing to propagate covariance");
}

}  // namespace

LinearCoeffs linear_coeffs(const CalibrationResult& calib, double time_h) {
    if (!(time_h > 0.0))
        throw DomainError("linear_coeffs requires time > 0 h, got " +
                          std::to_string(time_h));
    const MixtureParams& params = calib.params;
    params.validate();
    const FreeParametrization map(calib.k, calib.shared_u, calib.prior);
    check_order(calib, map);

    const int k = calib.k;
    const double log_t = std::log(time_h);

    LinearCoeffs out;
    out.time_h = time_h;
    std::vector<double> alpha_terms(k), beta_terms(k);
    for (int j = 0; j < k; ++j) {
        const ComponentParams& comp = params.components[j];
        alpha_terms[j] = params.weights[j] * comp.c * std::pow(time_h, params.component_u(j));
        beta_terms[j] = params.weights[j] * comp.a * std::pow(time_h, comp.v);
        out.alpha += alpha_terms[j];
        out.beta += beta_terms[j];
    }

    // Analytic gradient of (alpha, beta) in original space, then chain rule.
    OriginalGradient g_alpha, g_beta;
    g_alpha.d_weights = Eigen::VectorXd::Zero(k);
    g_alpha.d_a = Eigen::VectorXd::Zero(k);
    g_alpha.d_c = Eigen::VectorXd::Zero(k);
    g_alpha.d_u = Eigen::VectorXd::Zero(k);
    g_alpha.d_v = Eigen::VectorXd::Zero(k);
    g_beta = g_alpha;
    for (int j = 0; j < k; ++j) {
        const ComponentParams& comp = params.components[j];
        g_alpha.d_weights[j] = alpha_terms[j] / params.weights[j];
        g_alpha.d_c[j] = alpha_terms[j] / comp.c;
        g_alpha.d_u[j] = alpha_terms[j] * log_t;
        g_beta.d_weights[j] = beta_terms[j] / params.weights[j];
        g_beta.d_a[j] = beta_terms[j] / comp.a;
        g_beta.d_v[j] = beta_terms[j] * log_t;
    }

    const int p = calib.p();
    Eigen::MatrixXd jac(2, p);
    jac.row(0) = map.chain_gradient(params, g_alpha).transpose();
    jac.row(1) = map.chain_gradient(params, g_beta).transpose();

    out.covariance = jac * calib.covariance * jac.transpose();
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();

    const double var_a = out.covariance(0, 0), var_b = out.covariance(1, 1);
    const double det = var_a * var_b - out.covariance(0, 1) * out.covariance(0, 1);
    if (!(var_a > 0.0) || !(var_b > 0.0) || !(det > 0.0) || !std::isfinite(det)) {
        std::ostringstream msg;
        msg << "delta-method covariance at t=" << time_h
            << " h is not positive definite (var_alpha=" << var_a
            << ", var_beta=" << var_b << ", det=" << det
            << "); calibration covariance and parameter order are inconsistent";
        throw NumericError(msg.str());
    }
    return out;
}

double mean_surface(const CalibrationResult& calib, double dose_gy, double time_h) {
    if (!(dose_gy >= 0.0))
        throw DomainError("mean_surface requires dose >= 0 Gy");
    const LinearCoeffs coeffs = linear_coeffs(calib, time_h);
    return coeffs.alpha + coeffs.beta * dose_gy;
}

std::vector<SurfaceRow> surface_grid(const CalibrationResult& calib,
                                     const std::vector<double>& doses,
                                     const std::vector<double>& times) {
    if (doses.empty() || times.empty())
        throw DomainError("surface_grid needs non-empty dose and time lists");
    std::vector<SurfaceRow> rows;
    rows.reserve(doses.size() * times.size());
    for (double t : times) {
        const LinearCoeffs coeffs = linear_coeffs(calib, t);
        for (double d : doses) {
            if (!(d >= 0.0)) throw DomainError("surface_grid requires doses >= 0 Gy");
            Eigen::Vector2d sens(1.0, d);
            const double var = sens.dot(coeffs.covariance * sens);
            rows.push_back({d, t, coeffs.alpha + coeffs.beta * d,
                            std::sqrt(std::max(var, 0.0))});
        }
    }
    return rows;
}

}  // namespace focidose
