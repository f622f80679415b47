#include "focidose/types.hpp"

#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

namespace focidose {

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

}  // namespace

std::uint64_t dataset_digest(const std::vector<FociRecord>& records) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::uint64_t n = records.size();
    hash_bytes(h, &n, sizeof n);
    for (const FociRecord& r : records) {
        std::uint64_t dose_bits, time_bits;
        std::memcpy(&dose_bits, &r.dose_gy, sizeof dose_bits);
        std::memcpy(&time_bits, &r.time_h, sizeof time_bits);
        std::int64_t count = r.count;
        hash_bytes(h, &dose_bits, sizeof dose_bits);
        hash_bytes(h, &time_bits, sizeof time_bits);
        hash_bytes(h, &count, sizeof count);
    }
    return h;
}

CalibrationDataset::CalibrationDataset(std::vector<FociRecord> records,
                                       std::string provenance, int max_count)
    : records_(std::move(records)), provenance_(std::move(provenance)) {
    if (records_.empty()) throw DomainError("calibration dataset is empty");
    std::set<double> doses, times;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const FociRecord& r = records_[i];
        std::ostringstream at;
        at << " (record " << i + 1 << ")";
        if (!(r.dose_gy >= 0.0) || !std::isfinite(r.dose_gy))
            throw DomainError("dose must be a finite value >= 0 Gy" + at.str());
        if (!(r.time_h > 0.0) || !std::isfinite(r.time_h))
            throw DomainError("time must be a finite value > 0 h" + at.str());
        if (r.count < 0) throw DomainError("foci count must be >= 0" + at.str());
        if (r.count > max_count)
            throw DomainError("foci count " + std::to_string(r.count) +
                              " exceeds the plausibility ceiling " +
                              std::to_string(max_count) + at.str());
        doses.insert(r.dose_gy);
        times.insert(r.time_h);
    }
    if (doses.size() < 2 || times.size() < 2)
        throw DomainError(
            "calibration dataset needs at least two distinct doses and two "
            "distinct times; the surface is unidentifiable otherwise");
    digest_ = dataset_digest(records_);
}

void MixtureParams::validate() const {
    if (components.empty()) throw DomainError("mixture needs at least one component");
    if (weights.size() != components.size())
        throw DomainError("weight count does not match component count");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !(w < 1.0 + 1e-12))
            throw DomainError("mixture weights must lie in (0, 1)");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw DomainError("mixture weights must sum to 1 (off by " +
                          std::to_string(sum - 1.0) + ")");
    for (const ComponentParams& comp : components) {
        if (!(comp.a > 0.0)) throw DomainError("component parameter a must be > 0");
        if (!(comp.c > 0.0)) throw DomainError("component parameter c must be > 0");
        if (!std::isfinite(comp.v) || !std::isfinite(comp.u))
            throw DomainError("component exponents must be finite");
    }
    if (!std::isfinite(u)) throw DomainError("shared exponent u must be finite");
}

int free_parameter_count(int k, bool shared_u) {
    return shared_u ? (k - 1) + 3 * k + 1 : (k - 1) + 4 * k;
}

void PriorSpec::validate() const {
    for (const ParamBox* box : {&a_box, &c_box, &u_box, &v_box}) {
        if (!(box->lo < box->hi))
            throw DomainError("prior box bounds must satisfy lower < upper");
    }
    if (!(a_box.lo > 0.0) || !(c_box.lo > 0.0))
        throw DomainError("boxes for a and c must have positive lower bounds");
}

void check_bounds(const MixtureParams& params, const PriorSpec& spec) {
    auto fail = [](const std::string& name, int comp, double value, const ParamBox& box) {
        std::ostringstream msg;
        msg << "parameter " << name;
        if (comp >= 0) msg << "_" << comp + 1;
        msg << " = " << value << " outside its box [" << box.lo << ", " << box.hi << "]";
        throw BoundaryError(msg.str());
    };
    for (int k = 0; k < params.k(); ++k) {
        const ComponentParams& comp = params.components[k];
        if (comp.a < spec.a_box.lo || comp.a > spec.a_box.hi) fail("a", k, comp.a, spec.a_box);
        if (comp.c < spec.c_box.lo || comp.c > spec.c_box.hi) fail("c", k, comp.c, spec.c_box);
        if (comp.v < spec.v_box.lo || comp.v > spec.v_box.hi) fail("v", k, comp.v, spec.v_box);
        if (!params.shared_u &&
            (comp.u < spec.u_box.lo || comp.u > spec.u_box.hi))
            fail("u", k, comp.u, spec.u_box);
    }
    if (params.shared_u && (params.u < spec.u_box.lo || params.u > spec.u_box.hi))
        fail("u", -1, params.u, spec.u_box);
}

}  // namespace focidose
