#pragma once

// Limit quantities for independent standard normal marginals: the pair and
// triple recurrence probabilities, the variance surface of E_n and the
// covariance of the limit process.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rrind/weights.hpp"

namespace rrind {

struct NormalLimitParams {
    double r = 1.0;
    double s = 1.0;
    double r2 = 1.0;
    double s2 = 1.0;

    void validate() const {
        if (!(r > 0) || !(s > 0) || !(r2 > 0) || !(s2 > 0))
            throw std::invalid_argument("limit radii must be positive");
    }
};

/// P(|X1 - X2| < r) = 2 Phi(r / sqrt 2) - 1.
inline double p2_normal(double r) {
    if (!(r > 0)) throw std::invalid_argument("p2_normal needs r > 0");
    return 2.0 * std_normal_cdf(r / std::numbers::sqrt2) - 1.0;
}

inline constexpr double p3_truncation = 10.0;

/// P(|X1 - X2| < r, |X1 - X3| < r2): the integral over x of
/// (Phi(x+r) - Phi(x-r)) (Phi(x+r2) - Phi(x-r2)) phi(x) on [-10, 10].
inline double p3_mixed(double r, double r2) {
    if (!(r > 0) || !(r2 > 0)) throw std::invalid_argument("p3 needs positive radii");
    auto f = [r, r2](double x) {
        const double a = std_normal_cdf(x + r) - std_normal_cdf(x - r);
        const double b = std_normal_cdf(x + r2) - std_normal_cdf(x - r2);
        return a * b * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -p3_truncation, p3_truncation, 20, 1e-13,
                                                                         &err);
}

inline double p3_normal(double r) { return p3_mixed(r, r); }

/// 4 (p3(r) - p2(r)^2) (p3(s) - p2(s)^2).
inline double sigma2_normal(double r, double s) {
    const double fr = p3_normal(r) - p2_normal(r) * p2_normal(r);
    const double fs = p3_normal(s) - p2_normal(s) * p2_normal(s);
    return 4.0 * fr * fs;
}

/// Limit covariance with the triple probability taken at the smaller radius
/// on each side: 4 (p3(r ^ r2) - p2(r) p2(r2)) (p3(s ^ s2) - p2(s) p2(s2)).
inline double asymptotic_cov(const NormalLimitParams& p) {
    p.validate();
    const double fx = p3_normal(std::min(p.r, p.r2)) - p2_normal(p.r) * p2_normal(p.r2);
    const double fy = p3_normal(std::min(p.s, p.s2)) - p2_normal(p.s) * p2_normal(p.s2);
    return 4.0 * fx * fy;
}

/// Limit covariance with the triple probability P(d12 < r, d13 < r2) at
/// both radii: the covariance of the Hajek projections of the two rates.
inline double asymptotic_cov_mixed(const NormalLimitParams& p) {
    p.validate();
    const double fx = p3_mixed(p.r, p.r2) - p2_normal(p.r) * p2_normal(p.r2);
    const double fy = p3_mixed(p.s, p.s2) - p2_normal(p.s) * p2_normal(p.s2);
    return 4.0 * fx * fy;
}

struct DiagonalMax {
    double argmax = 0.0;
    double value = 0.0;
};

/// Golden-section search for the maximum of r -> sigma2_normal(r, r).
inline DiagonalMax sigma2_diagonal_max(double lo = 0.5, double hi = 2.5, double tol = 1e-4) {
    if (!(lo < hi) || !(lo > 0)) throw std::invalid_argument("bad search bracket");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [](double r) { return sigma2_normal(r, r); };
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double r = 0.5 * (a + b);
    return {r, f(r)};
}

/// (r, sigma2(r, r)) at `points` equally spaced radii in (0, r_max].
inline std::vector<std::pair<double, double>> sigma2_diagonal_curve(double r_max = 6.0, std::size_t points = 120) {
    if (!(r_max > 0) || points == 0) throw std::invalid_argument("bad curve range");
    std::vector<std::pair<double, double>> out;
    out.reserve(points);
    for (std::size_t k = 1; k <= points; ++k) {
        const double r = r_max * static_cast<double>(k) / static_cast<double>(points);
        out.emplace_back(r, sigma2_normal(r, r));
    }
    return out;
}

}  // namespace rrind
