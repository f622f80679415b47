#pragma once

// Independent reference implementations used only by tests. Nothing here may
// call the production function it is checking; series, quadrature and
// samplers are written from the definitions.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace testsupport {

// erf via composite 20-point Gauss-Legendre quadrature of (2/sqrt(pi))
// exp(-t^2) on [0, x], long-double accumulation, panels of width <= 0.25.
// Plenty below 1e-15 for |x| <= 6.
inline double erf_quadrature(double x) {
    static const long double nodes[10] = {
        0.0765265211334973337546404L, 0.2277858511416450780804962L,
        0.3737060887154195606725482L, 0.5108670019508270980043641L,
        0.6360536807265150254528367L, 0.7463319064601507926143051L,
        0.8391169718222188233945291L, 0.9122344282513259058677524L,
        0.9639719272779137912676661L, 0.9931285991850949247861224L};
    static const long double weights[10] = {
        0.1527533871307258506980843L, 0.1491729864726037467878287L,
        0.1420961093183820513292983L, 0.1316886384491766268984945L,
        0.1181945319615184173123774L, 0.1019301198172404350367501L,
        0.0832767415767047487247581L, 0.0626720483341090635695065L,
        0.0406014298003869413310400L, 0.0176140071391521183118620L};

    const long double z = std::abs(static_cast<long double>(x));
    const int panels = std::max(1, static_cast<int>(std::ceil(z / 0.25L)));
    const long double width = z / panels;
    long double total = 0.0L;
    for (int p = 0; p < panels; ++p) {
        const long double mid = (p + 0.5L) * width;
        const long double half = 0.5L * width;
        for (int i = 0; i < 10; ++i) {
            const long double t1 = mid - half * nodes[i];
            const long double t2 = mid + half * nodes[i];
            total += weights[i] * half * (std::exp(-t1 * t1) + std::exp(-t2 * t2));
        }
    }
    const long double value = total * 2.0L / std::sqrt(3.14159265358979323846264338L);
    return static_cast<double>(x < 0 ? -value : value);
}

// Termwise Poisson mixture log-likelihood in long double with direct
// factorials; only valid for small counts, which is all the oracle datasets
// use.
inline double brute_force_mixture_loglik(
    const std::vector<double>& weights,
    const std::vector<std::vector<long double>>& lambdas,  // [record][component]
    const std::vector<int>& counts) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        long double mix = 0.0L;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const long double lam = lambdas[i][k];
            long double pmf = std::exp(-lam);
            for (int j = 1; j <= counts[i]; ++j) pmf *= lam / j;
            mix += static_cast<long double>(weights[k]) * pmf;
        }
        total += std::log(mix);
    }
    return static_cast<double>(total);
}

// P[chi^2_19 > 43.8202] = 0.001; frozen critical value for the 20-bin
// goodness-of-fit checks.
inline constexpr double kChi2Df19P999 = 43.8202;

// Standard normal density and quantile helpers for test expectations.
inline double normal_pdf(double x, double mu, double sd) {
    const double z = (x - mu) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * 3.14159265358979323846));
}

// Seeded random SPD matrix with a chosen condition number: Q diag(s) Q^T
// with log-spaced spectrum and a random orthogonal Q from QR of a Gaussian
// matrix.
template <class Matrix>
Matrix random_spd(int p, double condition, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    Matrix gauss(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) gauss(i, j) = unit(engine);
    Eigen::HouseholderQR<Matrix> qr(gauss);
    Matrix q = qr.householderQ();
    Matrix diag = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i)
        diag(i, i) = std::pow(condition, -static_cast<double>(i) / (p - 1));
    return q * diag * q.transpose();
}

}  // namespace testsupport
