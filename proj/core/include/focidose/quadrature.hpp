#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <utility>
#include <vector>

#include "focidose/errors.hpp"

namespace focidose {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
    bool converged = false;
};

namespace detail {

// 15-point Kronrod nodes/weights on [-1, 1] with the embedded 7-point Gauss
// rule (positive half; nodes are symmetric).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGk15Weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGauss7Weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> gk15(F& f, double a, double b, int& evals) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double kronrod = 0.0, gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = half * kGk15Nodes[i];
        double fsum;
        if (i == 7) {
            fsum = f(mid);
            evals += 1;
        } else {
            fsum = f(mid - dx) + f(mid + dx);
            evals += 2;
        }
        kronrod += kGk15Weights[i] * fsum;
        // odd indices (and the center) carry the embedded Gauss-7 rule
        if (i % 2 == 1) gauss += kGauss7Weights[i / 2] * fsum;
    }
    kronrod *= half;
    gauss *= half;
    const double delta = std::abs(kronrod - gauss);
    double err = delta;
    if (delta > 0.0) err = std::min(200.0 * delta, std::pow(200.0 * delta, 1.5));
    return {kronrod, err};
}

struct Interval {
    double a, b, value, error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of f over [a, b]: the interval
// starts as eight panels (so features narrower than the node spacing of a
// single rule still register) and the panel with the largest error estimate
// is bisected until the summed error drops under max(abs_tol, rel_tol*|I|)
// or the interval budget runs out.
template <class F>
QuadratureResult adaptive_quadrature(F&& f, double a, double b, double abs_tol,
                                     double rel_tol = 0.0, int max_intervals = 4000) {
    QuadratureResult result;
    if (a == b) {
        result.converged = true;
        return result;
    }
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }

    int evals = 0;
    std::priority_queue<detail::Interval> queue;
    double total = 0.0;
    double total_err = 0.0;
    const int panels = 8;
    for (int p = 0; p < panels; ++p) {
        const double left = a + (b - a) * static_cast<double>(p) / panels;
        const double right = a + (b - a) * static_cast<double>(p + 1) / panels;
        auto piece = detail::gk15(f, left, right, evals);
        queue.push({left, right, piece.first, piece.second});
        total += piece.first;
        total_err += piece.second;
    }
    int splits = 0;

    while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) &&
           splits < max_intervals) {
        detail::Interval worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval too small to bisect in double precision; keep its result
            total_err = std::max(0.0, total_err);
            queue.push(worst);
            break;
        }
        auto left = detail::gk15(f, worst.a, mid, evals);
        auto right = detail::gk15(f, mid, worst.b, evals);
        total += left.first + right.first - worst.value;
        total_err += left.second + right.second - worst.error;
        queue.push({worst.a, mid, left.first, left.second});
        queue.push({mid, worst.b, right.first, right.second});
        ++splits;
    }

    result.value = sign * total;
    result.error_estimate = total_err;
    result.evaluations = evals;
    result.converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total));
    return result;
}

}  // namespace focidose
