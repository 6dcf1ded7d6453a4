#pragma once

// Product Gaussian weight measure dG(r,s) = g1(r) g2(s) dr ds.

#include <cmath>
#include <numbers>
#include <cstdio>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>

#include "rrind/core.hpp"

namespace rrind {

/// Standard normal CDF from std::erfc. erfc is accurate to a few ulp over
/// the whole line, well inside the 1e-12 absolute budget, and is exactly
/// 0.5 at the center.
inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double gaussian_cdf(double mu, double sigma, double x) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_cdf requires sigma > 0");
    return std_normal_cdf((x - mu) / sigma);
}

inline double gaussian_pdf(double mu, double sigma, double x) {
    const double u = (x - mu) / sigma;
    return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

enum class WeightOrigin { fixed, data_driven };

struct WeightSpec {
    double mu1 = 1.0;
    double sigma1 = 1.0;
    double mu2 = 1.0;
    double sigma2 = 1.0;
    WeightOrigin origin = WeightOrigin::fixed;

    void validate() const {
        if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(sigma1) || !std::isfinite(sigma2))
            throw std::invalid_argument("weight standard deviations must be positive and finite");
        if (!std::isfinite(mu1) || !std::isfinite(mu2)) throw std::invalid_argument("weight means must be finite");
    }

    double cdf1(double x) const { return std_normal_cdf((x - mu1) / sigma1); }
    double cdf2(double x) const { return std_normal_cdf((x - mu2) / sigma2); }

    /// Same N(mu, variance) on both axes.
    static WeightSpec fixed(double mu, double variance) { return fixed(mu, variance, mu, variance); }
    static WeightSpec fixed(double mu1, double var1, double mu2, double var2) {
        WeightSpec w{mu1, std::sqrt(var1), mu2, std::sqrt(var2), WeightOrigin::fixed};
        w.validate();
        return w;
    }

    bool operator==(const WeightSpec&) const = default;
};

namespace detail {

inline std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline void mean_population_variance(const std::vector<double>& v, double& mean, double& var) {
    long double s = 0.0L;
    for (double x : v) s += x;
    const long double m = s / static_cast<long double>(v.size());
    long double ss = 0.0L;
    for (double x : v) ss += (x - m) * (x - m);
    mean = static_cast<double>(m);
    var = static_cast<double>(ss / static_cast<long double>(v.size()));
}

}  // namespace detail

/// Human label: "N(1,1)" for symmetric specs, "N(a,b)xN(c,d)" otherwise,
/// "auto" for data-driven ones. Second parameter is the variance.
inline std::string label(const WeightSpec& w) {
    if (w.origin == WeightOrigin::data_driven) return "auto";
    const double v1 = w.sigma1 * w.sigma1;
    const double v2 = w.sigma2 * w.sigma2;
    const std::string a = "N(" + detail::fmt_num(w.mu1) + "," + detail::fmt_num(v1) + ")";
    if (w.mu1 == w.mu2 && w.sigma1 == w.sigma2) return a;
    return a + "xN(" + detail::fmt_num(w.mu2) + "," + detail::fmt_num(v2) + ")";
}

/// Moment-matched weights: mu/sigma^2 are the mean and population variance of
/// the N ordered-pair distances on each side.
inline WeightSpec fit_data_driven(const PairArrays& pairs) {
    if (pairs.count() < 2) throw std::invalid_argument("fit_data_driven needs N >= 2");
    WeightSpec w;
    double var1 = 0.0, var2 = 0.0;
    detail::mean_population_variance(pairs.z, w.mu1, var1);
    detail::mean_population_variance(pairs.t, w.mu2, var2);
    if (!(var1 > 0.0)) throw std::invalid_argument("degenerate sample: X-side distances have zero variance");
    if (!(var2 > 0.0)) throw std::invalid_argument("degenerate sample: Y-side distances have zero variance");
    w.sigma1 = std::sqrt(var1);
    w.sigma2 = std::sqrt(var2);
    w.origin = WeightOrigin::data_driven;
    return w;
}

/// A weight request: either a concrete spec or "fit from the data".
struct WeightChoice {
    std::optional<WeightSpec> fixed;  ///< empty means data-driven

    bool data_driven() const noexcept { return !fixed.has_value(); }
    WeightSpec resolve(const PairArrays& pairs) const { return fixed ? *fixed : fit_data_driven(pairs); }
    std::string label() const { return fixed ? rrind::label(*fixed) : "auto"; }
};

/// Parses `auto | N(mu,var) | N(mu1,var1)xN(mu2,var2)` and the preset names
/// n_1_1, n_0_1, n_1_4, n_0_4, n_2_4.
inline WeightChoice parse_weight_choice(const std::string& text) {
    if (text == "auto" || text == "g1g2") return {};
    static const std::regex preset(R"(n_(-?\d+(?:\.\d+)?)_(\d+(?:\.\d+)?))");
    static const std::regex one(R"(\s*N\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\s*)");
    static const std::regex two(R"(\s*N\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\s*[xX*]\s*N\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)\s*)");
    std::smatch m;
    auto num = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad number '" + s + "' in weight spec '" + text + "'");
        }
        if (used != s.size()) throw std::invalid_argument("bad number '" + s + "' in weight spec '" + text + "'");
        return v;
    };
    if (std::regex_match(text, m, preset)) return {WeightSpec::fixed(num(m[1]), num(m[2]))};
    if (std::regex_match(text, m, two)) return {WeightSpec::fixed(num(m[1]), num(m[2]), num(m[3]), num(m[4]))};
    if (std::regex_match(text, m, one)) return {WeightSpec::fixed(num(m[1]), num(m[2]))};
    throw std::invalid_argument("unrecognized weight spec '" + text + "' (expected auto, N(mu,var) or N(mu,var)xN(mu,var))");
}

}  // namespace rrind
