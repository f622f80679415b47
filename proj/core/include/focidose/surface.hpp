#pragma once

#include <vector>

#include <Eigen/Dense>

#include "focidose/calibrate.hpp"

namespace focidose {

// Time-conditional linear dose response: expected foci = alpha + beta * d,
// with the delta-method covariance of (alpha, beta) in the 2x2 block.
struct LinearCoeffs {
    double alpha = 0.0;  // foci per cell at dose 0
    double beta = 0.0;   // foci per cell per Gy
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    double time_h = 0.0;
};

// Collapses the calibrated mixture at time t: means are the weighted
// component sums, the covariance is grad(g) * Sigma * grad(g)^T with the
// analytic gradient chain-ruled through the free parametrization recorded in
// the calibration result. A non-PD 2x2 output signals an inconsistent
// parameter order and raises NumericError.
LinearCoeffs linear_coeffs(const CalibrationResult& calib, double time_h);

// alpha_t + beta_t * d.
double mean_surface(const CalibrationResult& calib, double dose_gy, double time_h);

struct SurfaceRow {
    double dose_gy = 0.0;
    double time_h = 0.0;
    double mu = 0.0;
    double sd = 0.0;
};

// One row per (dose, time): mean response and its delta-method standard
// deviation sqrt((1, d) Cov (1, d)^T).
std::vector<SurfaceRow> surface_grid(const CalibrationResult& calib,
                                     const std::vector<double>& doses,
                                     const std::vector<double>& times);

}  // namespace focidose
