#pragma once

#include <Eigen/Dense>

#include "focidose/errors.hpp"

namespace focidose::specfun {

// Error function, |error| < 1e-12 on |x| <= 6, odd in x.
double erf(double x);

// Kummer confluent hypergeometric 1F1(1; 1/2; z) for z >= 0, via the closed
// form exp(z)*sqrt(pi*z)*erf(sqrt(z)) + 1. Grows like exp(z); for large z the
// value is assembled in log space first, so overflow happens only when the
// result itself exceeds the double range (use the log variant then).
double kummer_1f1_half(double z);
double log_kummer_1f1_half(double z);

// Parameters of a bivariate normal (X, Y); the ratio density below is the
// exact law of W = X / Y.
struct BivariateNormalSpec {
    double mu_x = 0.0;
    double mu_y = 0.0;
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    double rho = 0.0;

    void validate() const;
};

// Density of W = X / Y for dependent normals. Everywhere finite and
// non-negative for |rho| < 1 (the denominator quadratic has no real root).
// Internally evaluated in log space: the 1F1 argument reaches ~1e4 for
// realistic calibration magnitudes and the direct formula overflows.
double ratio_normal_pdf(double w, const BivariateNormalSpec& spec);
double log_ratio_normal_pdf(double w, const BivariateNormalSpec& spec);

// Inverse of a symmetric positive definite matrix via Cholesky, polished by
// one or two Newton refinement sweeps with extended-precision residuals.
// A non-PD input throws NumericError carrying the smallest-eigenvalue
// estimate; that signals a failed mode search and must not be papered over.
// A caller who explicitly wants stabilization can pass rel_ridge > 0
// (e.g. 1e-8) to add rel_ridge * mean(diag) to the diagonal first.
Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a, double rel_ridge = 0.0);

}  // namespace focidose::specfun
