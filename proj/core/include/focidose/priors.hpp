#pragma once

#include <random>
#include <string>
#include <string_view>

#include "focidose/errors.hpp"

namespace focidose {

enum class TimePriorKind { Uniform, NonStandardBeta, Point };

// Prior on the post-irradiation time. Uniform and interval-rescaled beta
// cover the families under evaluation; Point expresses the classical fixed
// known time, which estimation handles by direct conditioning instead of
// marginalization.
struct TimePrior {
    TimePriorKind kind = TimePriorKind::Uniform;
    double lower_h = 0.0;
    double upper_h = 0.0;
    double alpha = 0.0;  // beta kind only
    double beta = 0.0;

    static TimePrior uniform(double p, double q);
    static TimePrior nonstandard_beta(double alpha, double beta, double p, double q);
    static TimePrior point(double t);

    void validate() const;
};

// Density at t; zero outside [p, q]. The point prior has no density and
// raises DomainError (it is conditioned on directly).
double time_prior_pdf(const TimePrior& prior, double t);

// Draw from the prior. The beta kind is sampled exactly via two gamma draws.
double time_prior_sample(const TimePrior& prior, std::mt19937_64& engine);

// Command-line syntax: "uniform:p,q", "beta:alpha,beta,p,q", "point:t".
TimePrior parse_time_prior(std::string_view text);
std::string format_time_prior(const TimePrior& prior);

}  // namespace focidose
