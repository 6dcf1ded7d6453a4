#pragma once

// Comparison tests: distance covariance, the classical Pearson / Spearman /
// Kendall trio, and HSIC with Gaussian kernels. dCov and HSIC are
// calibrated with the same permutation engine as the recurrence test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "rrind/core.hpp"
#include "rrind/parallel.hpp"
#include "rrind/permutation.hpp"
#include "rrind/transform.hpp"

namespace rrind {

enum class BaselineTest { dcov, psk_max, hsic };

inline const char* to_string(BaselineTest t) {
    switch (t) {
    case BaselineTest::dcov: return "dcov";
    case BaselineTest::psk_max: return "psk_max";
    case BaselineTest::hsic: return "hsic";
    }
    return "?";
}

struct BaselineResult {
    BaselineTest test = BaselineTest::dcov;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// H D H for a distance-like matrix (row, column and grand means removed).
inline std::vector<double> double_center(const std::vector<double>& d, std::size_t n) {
    std::vector<double> row(n, 0.0);
    double grand = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) row[i] += d[i * n + j];
        grand += row[i];
        row[i] /= static_cast<double>(n);
    }
    grand /= static_cast<double>(n * n);
    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = d[i * n + j] - row[i] - row[j] + grand;
    return out;
}

// (1/n^2) sum_ij A_{sigma(i) sigma(j)} B_ij.
inline double permuted_inner(const std::vector<double>& a, const std::vector<double>& b, std::size_t n,
                             const std::vector<std::size_t>& sigma) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.data() + sigma[i] * n;
        const double* brow = b.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) s += arow[sigma[j]] * brow[j];
    }
    return static_cast<double>(s / static_cast<long double>(n * n));
}

inline std::vector<std::size_t> identity_perm(std::size_t n) {
    std::vector<std::size_t> id(n);
    for (std::size_t i = 0; i < n; ++i) id[i] = i;
    return id;
}

template <class Stat>
BaselineResult centered_permutation_test(BaselineTest which, const std::vector<double>& a, const std::vector<double>& b,
                                         std::size_t n, std::size_t m, std::uint64_t seed, PValueEstimator est,
                                         unsigned threads, Stat&& finalize) {
    BaselineResult out;
    out.test = which;
    out.m = m;
    out.seed = seed;
    const double t_obs = permuted_inner(a, b, n, identity_perm(n));
    out.statistic = finalize(t_obs);
    const std::size_t c = count_exceedances(n, m, seed, t_obs, threads, [&](const std::vector<std::size_t>& sigma) {
        return permuted_inner(a, b, n, sigma);
    });
    out.p_value = p_value_from_count(c, m, est);
    return out;
}

}  // namespace detail

/// Empirical distance covariance V^2 = (1/n^2) sum A_ij B_ij of the
/// double-centered distance matrices, and the distance correlation.
struct DcovValue {
    double dcov2 = 0.0;
    double dcor = 0.0;
};

inline DcovValue distance_covariance(const DistanceMatrix& dx, const DistanceMatrix& dy) {
    const std::size_t n = dx.size();
    if (dy.size() != n) throw std::invalid_argument("distance matrices differ in size");
    const auto a = detail::double_center(dx.data(), n);
    const auto b = detail::double_center(dy.data(), n);
    const auto id = detail::identity_perm(n);
    DcovValue v;
    v.dcov2 = detail::permuted_inner(a, b, n, id);
    const double vx = detail::permuted_inner(a, a, n, id);
    const double vy = detail::permuted_inner(b, b, n, id);
    v.dcor = vx > 0 && vy > 0 ? v.dcov2 / std::sqrt(vx * vy) : 0.0;
    return v;
}

inline BaselineResult dcov_test(const PairedSample& sample, std::size_t m, std::uint64_t seed,
                                PValueEstimator est = PValueEstimator::paper, unsigned threads = 1) {
    if (sample.size() < 4) throw std::invalid_argument("dcov_test needs n >= 4");
    const auto [dx, dy] = distance_matrices(sample);
    const std::size_t n = dx.size();
    const auto a = detail::double_center(dx.data(), n);
    const auto b = detail::double_center(dy.data(), n);
    return detail::centered_permutation_test(BaselineTest::dcov, a, b, n, m, seed, est, threads,
                                             [](double v) { return v; });
}

// ---------------------------------------------------------------------------
// Pearson, Spearman, Kendall

struct CorrelationTest {
    double estimate = 0.0;
    double p_value = 1.0;
};

namespace detail {

inline std::vector<double> scalar_column(const std::vector<Point>& pts, const char* side) {
    std::vector<double> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        if (p.size() != 1) throw std::invalid_argument(std::string("PSK tests need scalar ") + side + " observations");
        out.push_back(p[0]);
    }
    return out;
}

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Two-sided p-value of r under the t approximation with n - 2 df.
inline double correlation_t_pvalue(double r, std::size_t n) {
    if (std::abs(r) >= 1.0) return 0.0;
    const double df = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    const boost::math::students_t_distribution<double> dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

// Number of permutations of n items by inversion count (Mahonian numbers),
// as doubles; exact for the n <= 12 range used here.
inline std::vector<double> inversion_count_distribution(std::size_t n) {
    std::vector<double> f{1.0};
    for (std::size_t k = 2; k <= n; ++k) {
        std::vector<double> g(f.size() + k - 1, 0.0);
        for (std::size_t i = 0; i < f.size(); ++i)
            for (std::size_t d = 0; d < k; ++d) g[i + d] += f[i];
        f.swap(g);
    }
    return f;
}

}  // namespace detail

inline constexpr std::size_t kendall_exact_max_n = 12;

inline CorrelationTest pearson_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("pearson_test needs n >= 3 paired values");
    const double r = detail::pearson_r(x, y);
    return {r, detail::correlation_t_pvalue(r, x.size())};
}

/// Pearson on average ranks; t approximation for the p-value.
inline CorrelationTest spearman_test(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("spearman_test needs n >= 3 paired values");
    const double rho = detail::pearson_r(average_ranks(x), average_ranks(y));
    return {rho, detail::correlation_t_pvalue(rho, x.size())};
}

/// Kendall's tau-b. Exact permutation null for n <= 12 without ties; normal
/// approximation with tie-corrected variance otherwise.
inline CorrelationTest kendall_test(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (y.size() != n || n < 3) throw std::invalid_argument("kendall_test needs n >= 3 paired values");
    long long s = 0;
    std::size_t tied_x = 0, tied_y = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0) ++tied_x;
            if (dy == 0) ++tied_y;
            s += (dx > 0 ? 1 : dx < 0 ? -1 : 0) * (dy > 0 ? 1 : dy < 0 ? -1 : 0);
        }
    const double n0 = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    const double denom = std::sqrt((n0 - static_cast<double>(tied_x)) * (n0 - static_cast<double>(tied_y)));
    CorrelationTest out;
    out.estimate = denom > 0 ? static_cast<double>(s) / denom : 0.0;

    if (n <= kendall_exact_max_n && tied_x == 0 && tied_y == 0) {
        // S = n0 - 2 * inversions; two-sided P(|S| >= |s|).
        const auto f = detail::inversion_count_distribution(n);
        double total = 0, tail = 0;
        for (std::size_t inv = 0; inv < f.size(); ++inv) {
            const double sv = n0 - 2.0 * static_cast<double>(inv);
            total += f[inv];
            if (std::abs(sv) >= std::abs(static_cast<double>(s)) - 1e-9) tail += f[inv];
        }
        out.p_value = std::min(1.0, tail / total);
        return out;
    }
    // Tie-corrected variance of S.
    struct TieSums {
        double a = 0, b = 0, c = 0;
    };
    auto tie_sums = [&](const std::vector<double>& v) {
        std::vector<double> sorted(v);
        std::sort(sorted.begin(), sorted.end());
        TieSums s;
        std::size_t p = 0;
        while (p < n) {
            std::size_t q = p;
            while (q < n && sorted[q] == sorted[p]) ++q;
            const double t = static_cast<double>(q - p);
            s.a += t * (t - 1) * (2 * t + 5);
            s.b += t * (t - 1) * (t - 2);
            s.c += t * (t - 1);
            p = q;
        }
        return s;
    };
    const TieSums tx = tie_sums(x);
    const TieSums ty = tie_sums(y);
    const double dn = static_cast<double>(n);
    const double var = (dn * (dn - 1) * (2 * dn + 5) - tx.a - ty.a) / 18.0 +
                       tx.b * ty.b / (9 * dn * (dn - 1) * (dn - 2)) + tx.c * ty.c / (2 * dn * (dn - 1));
    if (!(var > 0)) {
        out.p_value = 1.0;
        return out;
    }
    const double zscore = static_cast<double>(s) / std::sqrt(var);
    const boost::math::normal_distribution<double> unit;
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(unit, std::abs(zscore))));
    return out;
}

struct PskResult {
    CorrelationTest pearson;
    CorrelationTest spearman;
    CorrelationTest kendall;

    double min_p() const { return std::min({pearson.p_value, spearman.p_value, kendall.p_value}); }
};

inline PskResult psk_tests(const PairedSample& sample) {
    sample.validate();
    const auto x = detail::scalar_column(sample.xs, "x");
    const auto y = detail::scalar_column(sample.ys, "y");
    return {pearson_test(x, y), spearman_test(x, y), kendall_test(x, y)};
}

/// The three classical tests. The reported statistic is the Pearson r and
/// the p-value the smallest of the three; power studies track each test's
/// rejections separately and report the largest rejection rate.
inline BaselineResult psk_max_test(const PairedSample& sample) {
    const auto r = psk_tests(sample);
    BaselineResult out;
    out.test = BaselineTest::psk_max;
    out.statistic = r.pearson.estimate;
    out.p_value = r.min_p();
    return out;
}

// ---------------------------------------------------------------------------
// HSIC

namespace detail {

inline double median_offdiagonal(const DistanceMatrix& d) {
    const std::size_t n = d.size();
    std::vector<double> v;
    v.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) v.push_back(d(i, j));
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

inline std::vector<double> gaussian_gram(const DistanceMatrix& d, double bandwidth) {
    const std::size_t n = d.size();
    std::vector<double> k(n * n);
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) k[i * n + j] = std::exp(-d(i, j) * d(i, j) * inv);
    return k;
}

}  // namespace detail

namespace detail {

struct HsicKernels {
    std::vector<double> k_centered;
    std::vector<double> l;
    std::size_t n = 0;
};

inline HsicKernels hsic_kernels(const DistanceMatrix& dx, const DistanceMatrix& dy) {
    if (dx.size() != dy.size()) throw std::invalid_argument("distance matrices differ in size");
    const double hx = median_offdiagonal(dx);
    const double hy = median_offdiagonal(dy);
    if (!(hx > 0) || !(hy > 0)) throw std::invalid_argument("HSIC needs a positive median distance on both sides");
    const std::size_t n = dx.size();
    return {double_center(gaussian_gram(dx, hx), n), gaussian_gram(dy, hy), n};
}

}  // namespace detail

/// Biased HSIC (1/n^2) tr(K H L H) with Gaussian kernels whose bandwidth is
/// the median pairwise distance of each marginal.
inline double hsic_statistic(const DistanceMatrix& dx, const DistanceMatrix& dy) {
    const auto kl = detail::hsic_kernels(dx, dy);
    return detail::permuted_inner(kl.k_centered, kl.l, kl.n, detail::identity_perm(kl.n));
}

inline BaselineResult hsic_test(const PairedSample& sample, std::size_t m, std::uint64_t seed,
                                PValueEstimator est = PValueEstimator::paper, unsigned threads = 1) {
    if (sample.size() < 4) throw std::invalid_argument("hsic_test needs n >= 4");
    const auto [dx, dy] = distance_matrices(sample);
    const auto kl = detail::hsic_kernels(dx, dy);
    return detail::centered_permutation_test(BaselineTest::hsic, kl.k_centered, kl.l, kl.n, m, seed, est, threads,
                                             [](double v) { return v; });
}

}  // namespace rrind
