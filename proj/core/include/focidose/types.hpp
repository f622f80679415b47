#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focidose/errors.hpp"

namespace focidose {

// One scored cell: absorbed dose (Gy) and post-irradiation time (h) are the
// known design values, count is the number of foci seen in that cell.
struct FociRecord {
    double dose_gy = 0.0;
    double time_h = 0.0;
    int count = 0;
};

// Calibration data: foci counts from cells irradiated under controlled
// conditions. The response surface is identifiable only when at least two
// distinct doses and two distinct times are present.
class CalibrationDataset {
public:
    // Counts above `max_count` are rejected at ingestion; they would be far
    // outside the plausible range of this assay and usually indicate data
    // corruption. The ceiling also keeps log-factorial terms well behaved.
    static constexpr int kDefaultMaxCount = 200;

    CalibrationDataset(std::vector<FociRecord> records, std::string provenance,
                       int max_count = kDefaultMaxCount);

    const std::vector<FociRecord>& records() const { return records_; }
    const std::string& provenance() const { return provenance_; }
    std::size_t size() const { return records_.size(); }

    // FNV-1a over the record stream; stable identifier carried into artifacts.
    std::uint64_t digest() const { return digest_; }

private:
    std::vector<FociRecord> records_;
    std::string provenance_;
    std::uint64_t digest_ = 0;
};

std::uint64_t dataset_digest(const std::vector<FociRecord>& records);

// Per-component surface parameters: mean foci rate is c*t^u + a*t^v*d.
// `u` mirrors the shared exponent when the mixture uses one; in the
// generalized form each component carries its own value.
struct ComponentParams {
    double a = 1.0;  // foci per Gy scale on the dose term
    double c = 1.0;  // spontaneous (dose 0) scale
    double v = 0.0;  // time exponent, dose term
    double u = 0.0;  // time exponent, intercept term
};

// Mixture weights plus component surfaces. When shared_u is true the
// intercept exponent `u` is common to all components (the 16-parameter
// K=4 form); otherwise each component's own u applies.
struct MixtureParams {
    std::vector<double> weights;
    std::vector<ComponentParams> components;
    double u = 0.0;
    bool shared_u = true;

    int k() const { return static_cast<int>(components.size()); }
    double component_u(int comp) const { return shared_u ? u : components[comp].u; }

    // Throws DomainError on malformed weights/components.
    void validate() const;
};

// Number of free parameters: (K-1) weights + 3K surface values + 1 shared
// exponent, or (K-1) + 4K in the generalized form.
int free_parameter_count(int k, bool shared_u);

struct ParamBox {
    double lo = 0.0;
    double hi = 0.0;
};

// Prior: symmetric Dirichlet(1/K, ..., 1/K) on the weights and independent
// uniforms on boxes for the surface parameters. The Dirichlet term can be
// switched off to recover a flat-prior (maximum likelihood) kernel.
struct PriorSpec {
    bool perks = true;
    ParamBox a_box{1e-6, 100.0};
    ParamBox c_box{1e-6, 100.0};
    ParamBox u_box{-5.0, 5.0};
    ParamBox v_box{-5.0, 5.0};

    void validate() const;
};

// Throws BoundaryError naming the first parameter outside its box.
void check_bounds(const MixtureParams& params, const PriorSpec& spec);

}  // namespace focidose
