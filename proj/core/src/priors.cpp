#include "focidose/priors.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace focidose {

TimePrior TimePrior::uniform(double p, double q) {
    TimePrior prior;
    prior.kind = TimePriorKind::Uniform;
    prior.lower_h = p;
    prior.upper_h = q;
    prior.validate();
    return prior;
}

TimePrior TimePrior::nonstandard_beta(double alpha, double beta, double p, double q) {
    TimePrior prior;
    prior.kind = TimePriorKind::NonStandardBeta;
    prior.alpha = alpha;
    prior.beta = beta;
    prior.lower_h = p;
    prior.upper_h = q;
    prior.validate();
    return prior;
}

TimePrior TimePrior::point(double t) {
    TimePrior prior;
    prior.kind = TimePriorKind::Point;
    prior.lower_h = t;
    prior.upper_h = t;
    prior.validate();
    return prior;
}

void TimePrior::validate() const {
    if (kind == TimePriorKind::Point) {
        if (!(lower_h > 0.0) || !std::isfinite(lower_h))
            throw DomainError("point prior time must be a positive finite value");
        return;
    }
    if (!(lower_h > 0.0) || !(lower_h < upper_h))
        throw DomainError("time prior needs 0 < lower < upper (hours); a fixed "
                          "time is expressed with the point kind");
    if (kind == TimePriorKind::NonStandardBeta && (!(alpha > 0.0) || !(beta > 0.0)))
        throw DomainError("beta prior shape parameters must be positive");
}

double time_prior_pdf(const TimePrior& prior, double t) {
    prior.validate();
    switch (prior.kind) {
        case TimePriorKind::Uniform:
            if (t < prior.lower_h || t > prior.upper_h) return 0.0;
            return 1.0 / (prior.upper_h - prior.lower_h);
        case TimePriorKind::NonStandardBeta: {
            if (t < prior.lower_h || t > prior.upper_h) return 0.0;
            const double p = prior.lower_h, q = prior.upper_h;
            const double log_b = std::lgamma(prior.alpha) + std::lgamma(prior.beta) -
                                 std::lgamma(prior.alpha + prior.beta);
            // endpoints: zero for shape > 1, infinite spike for shape < 1
            if (t == p) return prior.alpha > 1.0 ? 0.0
                        : prior.alpha == 1.0
                            ? std::exp(-log_b + (prior.beta - 1.0) * std::log(q - t) -
                                       (prior.alpha + prior.beta - 1.0) * std::log(q - p))
                            : std::numeric_limits<double>::infinity();
            if (t == q) return prior.beta > 1.0 ? 0.0
                        : prior.beta == 1.0
                            ? std::exp(-log_b + (prior.alpha - 1.0) * std::log(t - p) -
                                       (prior.alpha + prior.beta - 1.0) * std::log(q - p))
                            : std::numeric_limits<double>::infinity();
            const double log_pdf = (prior.alpha - 1.0) * std::log(t - p) +
                                   (prior.beta - 1.0) * std::log(q - t) - log_b -
                                   (prior.alpha + prior.beta - 1.0) * std::log(q - p);
            return std::exp(log_pdf);
        }
        case TimePriorKind::Point:
            throw DomainError(
                "the point prior has no density; condition on the fixed time "
                "directly");
    }
    throw DomainError("unknown time prior kind");
}

double time_prior_sample(const TimePrior& prior, std::mt19937_64& engine) {
    prior.validate();
    switch (prior.kind) {
        case TimePriorKind::Uniform: {
            std::uniform_real_distribution<double> unit(prior.lower_h, prior.upper_h);
            return unit(engine);
        }
        case TimePriorKind::NonStandardBeta: {
            std::gamma_distribution<double> ga(prior.alpha, 1.0);
            std::gamma_distribution<double> gb(prior.beta, 1.0);
            const double x = ga(engine);
            const double y = gb(engine);
            const double b = x / (x + y);
            return prior.lower_h + (prior.upper_h - prior.lower_h) * b;
        }
        case TimePriorKind::Point:
            return prior.lower_h;
    }
    throw DomainError("unknown time prior kind");
}

TimePrior parse_time_prior(std::string_view text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string_view::npos)
        throw ParseError("time prior must look like uniform:p,q, "
                         "beta:alpha,beta,p,q or point:t");
    const std::string kind(text.substr(0, colon));
    std::vector<double> values;
    std::string rest(text.substr(colon + 1));
    std::istringstream in(rest);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ParseError("bad numeric field '" + field + "' in time prior '" +
                             std::string(text) + "'");
        }
    }
    try {
        if (kind == "uniform" && values.size() == 2)
            return TimePrior::uniform(values[0], values[1]);
        if (kind == "beta" && values.size() == 4)
            return TimePrior::nonstandard_beta(values[0], values[1], values[2],
                                               values[3]);
        if (kind == "point" && values.size() == 1) return TimePrior::point(values[0]);
    } catch (const DomainError& e) {
        throw ParseError("invalid time prior '" + std::string(text) + "': " + e.what());
    }
    throw ParseError("unrecognized time prior '" + std::string(text) +
                     "'; expected uniform:p,q, beta:alpha,beta,p,q or point:t");
}

std::string format_time_prior(const TimePrior& prior) {
    std::ostringstream out;
    switch (prior.kind) {
        case TimePriorKind::Uniform:
            out << "uniform:" << prior.lower_h << "," << prior.upper_h;
            break;
        case TimePriorKind::NonStandardBeta:
            out << "beta:" << prior.alpha << "," << prior.beta << "," << prior.lower_h
                << "," << prior.upper_h;
            break;
        case TimePriorKind::Point:
            out << "point:" << prior.lower_h;
            break;
    }
    return out.str();
}

}  // namespace focidose
