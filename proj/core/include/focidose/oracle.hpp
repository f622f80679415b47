#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "focidose/calibrate.hpp"
#include "focidose/specfun.hpp"

namespace focidose::oracle {

// Brute-force cross-checks for the production math. Everything here is
// deliberately written from the definitions (series, direct simulation)
// rather than through the functions it verifies.

// Truncated Pochhammer series for 1F1(1; 1/2; z): sum_k z^k / (1/2)_k.
// Partial sums increase monotonically for z > 0.
double kummer_series(double z, int terms);

struct Histogram {
    std::vector<double> edges;    // bins + 1 values
    std::vector<double> density;  // per-bin density estimate
    std::vector<double> se;       // Monte Carlo standard error of each density
    std::size_t draws = 0;
};

// Samples (X, Y) through an explicit 2x2 factorization and histograms X/Y
// over the central [q, 1-q] quantile range of the draws.
Histogram mc_ratio_histogram(const specfun::BivariateNormalSpec& spec,
                             std::size_t draws, int bins, std::uint64_t seed,
                             double tail_quantile = 0.001);

struct DeltaPropagation {
    double mean_alpha = 0.0;
    double mean_beta = 0.0;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    std::size_t draws = 0;
};

// Samples free-parameter vectors from N(mode, covariance), maps each draw
// through the parameter transform and the (alpha_t, beta_t) sums, and
// reports the empirical mean and covariance.
DeltaPropagation mc_delta_propagation(const CalibrationResult& calib, double time_h,
                                      std::size_t draws, std::uint64_t seed);

struct OracleReport {
    std::string check;
    double statistic = 0.0;  // worst observed discrepancy, check-specific units
    double threshold = 0.0;
    bool pass = false;
    std::uint64_t seed = 0;
    std::size_t sample_size = 0;
};

// Fixed verification battery used by the CLI and the acceptance suite.
std::vector<OracleReport> run_all(std::uint64_t seed);

}  // namespace focidose::oracle
