#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "focidose/model.hpp"
#include "focidose/transform.hpp"
#include "focidose/types.hpp"

namespace focidose {

struct FitConfig {
    int starts = 32;
    int max_iterations = 400;
    double gradient_tolerance = 1e-6;   // sup norm of the projected gradient
    double objective_tolerance = 1e-9;  // relative change of the objective
    double hessian_step = 1e-4;         // relative central-difference step
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
};

struct StartDiagnostic {
    int start = 0;
    bool converged = false;
    int iterations = 0;
    double log_posterior = 0.0;
    std::string note;
};

// Posterior mode in both spaces plus per-start diagnostics.
struct ModeFit {
    MixtureParams params;        // canonical component order
    Eigen::VectorXd free_mode;   // same point in free coordinates
    double log_posterior = 0.0;
    double log_likelihood = 0.0;
    double gradient_norm = 0.0;
    std::vector<StartDiagnostic> diagnostics;
    std::vector<std::string> warnings;
};

// Multi-start quasi-Newton search for the posterior mode in the free
// parametrization. Start 0 is a moment-matched warm start; the rest are
// Latin hypercube points, alternating between a data-informed sampling box
// and the full transformed box. Throws CalibrationError when every start
// fails; weak components (weight < 1e-4) and parameters pinned at a box
// bound are reported as warnings on the result.
ModeFit fit_map(const CalibrationDataset& data, int k, bool shared_u,
                const FitConfig& config = {}, const PriorSpec& spec = {});

// Central finite-difference Hessian of a scalar function, symmetrized.
// Steps are rel_step * max(1, |x_i|) per coordinate.
Eigen::MatrixXd numeric_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                const Eigen::VectorXd& x, double rel_step);

// Hessian of the negative log posterior kernel at the mode, in free space.
Eigen::MatrixXd hessian_at_mode(const CalibrationDataset& data, const ModeFit& mode,
                                const PriorSpec& spec = {}, const FitConfig& config = {});

// Calibration coefficients with their Laplace covariance. The covariance
// lives in the free parametrization; parameter_order documents the
// coordinate meaning so downstream consumers transform consistently.
struct CalibrationResult {
    MixtureParams params;
    Eigen::VectorXd free_mode;
    Eigen::MatrixXd covariance;
    std::vector<std::string> parameter_order;
    double log_posterior_at_mode = 0.0;
    double log_likelihood_at_mode = 0.0;
    double aic = 0.0;
    int k = 0;
    bool shared_u = true;
    std::uint64_t data_digest = 0;
    std::vector<std::string> warnings;

    int p() const { return static_cast<int>(free_mode.size()); }
    PriorSpec prior;  // boxes the fit ran under (needed to rebuild the transform)
};

// Gaussian approximation at the mode: covariance = inverse Hessian. A
// non-PD Hessian raises CalibrationError suggesting a re-run with more
// starts.
CalibrationResult laplace_approx(const CalibrationDataset& data, const ModeFit& mode,
                                 const PriorSpec& spec = {}, const FitConfig& config = {});

// Akaike information criterion from the log likelihood at the mode.
double aic(double log_likelihood_at_mode, int p);

enum class UMode { Shared, PerComponent, Both };

struct ModelCandidate {
    int k = 0;
    bool shared_u = true;
    int p = 0;
    double aic = 0.0;
    double log_likelihood = 0.0;
    bool has_aic = false;  // mode search succeeded, AIC comparable
    bool ok = false;       // full result (Laplace covariance) available
    std::string error;
};

struct ModelSelection {
    CalibrationResult best;
    std::vector<ModelCandidate> table;
};

// Fits every candidate (K, u-mode) pair and keeps the lowest AIC among the
// candidates with a usable Laplace result. Ties break toward fewer
// parameters, then smaller K. A candidate whose mode was found but whose
// Hessian is degenerate (typical for overfit K, where dead components pin at
// the weight-ratio cap) still reports its AIC in the table. Throws only when
// no candidate produces a usable result.
ModelSelection select_model(const CalibrationDataset& data, const std::vector<int>& ks,
                            UMode u_mode = UMode::Shared, const FitConfig& config = {},
                            const PriorSpec& spec = {});

}  // namespace focidose
