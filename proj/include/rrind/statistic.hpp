#pragma once

// The Cramer-von Mises recurrence statistic
//
//   T_n = n * int int (RR^{XY}(r,s) - RR^X(r) RR^Y(s))^2 g1(r) g2(s) dr ds
//       = n * (A + B - 2C)
//
// with, over the N = n(n-1) ordered pairs (z_k, t_k),
//
//   A = 1/N^2 sum_{i,j} (1 - G1(max(z_i,z_j))) (1 - G2(max(t_i,t_j)))
//   B = (1 - 1/N^2 sum_i (2i-1) G1(z*_i)) (1 - 1/N^2 sum_i (2i-1) G2(t*_i))
//   C = 1/N^3 sum_{i,j,k} (1 - G1(max(z_i,z_j))) (1 - G2(max(t_i,t_k)))
//
// where z*, t* are order statistics. Because every distance is >= 0 the
// integral over (0, inf) of 1{z < r} g1(r) dr is exactly 1 - G1(z) with the
// untruncated CDF, so these closed forms equal the integral over r, s > 0.
//
// Evaluators, slowest to fastest:
//   tn_literal    O(N^3)      C as the literal triple sum; gated to n <= 12
//   tn_reference  O(N^2)      C via the u/v factorization
//   tn_fast       O(N log N)  rank + suffix sums and a Fenwick sweep for A

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rrind/core.hpp"
#include "rrind/weights.hpp"

namespace rrind {

enum class StatKind { cvm, sup };

inline const char* to_string(StatKind k) { return k == StatKind::cvm ? "cvm" : "sup"; }

struct AbcTerms {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

struct StatValue {
    double t = 0.0;
    StatKind kind = StatKind::cvm;
    std::optional<AbcTerms> abc;
};

namespace detail {

using acc_t = long double;

inline void check_pairs(const PairArrays& pairs) {
    if (pairs.count() < 2 || pairs.z.size() != pairs.t.size())
        throw std::invalid_argument("statistic needs N >= 2 paired distances");
}

// T_n from its three terms, clamped at zero: rounding can push an exactly
// zero statistic a few ulp negative.
inline StatValue assemble(std::size_t n, acc_t a, acc_t b, acc_t c) {
    StatValue out;
    out.kind = StatKind::cvm;
    out.abc = AbcTerms{static_cast<double>(a), static_cast<double>(b), static_cast<double>(c)};
    const acc_t t = static_cast<acc_t>(n) * (a + b - 2 * c);
    out.t = t > 0 ? static_cast<double>(t) : 0.0;
    return out;
}

// 1 - 1/N^2 sum (2i-1) G(x*_i) over the sorted values.
inline acc_t squared_rate_integral(std::vector<double> values, double mu, double sigma) {
    std::sort(values.begin(), values.end());
    const acc_t N = static_cast<acc_t>(values.size());
    acc_t s = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += static_cast<acc_t>(2 * i + 1) * std_normal_cdf((values[i] - mu) / sigma);
    return 1 - s / (N * N);
}

// Fenwick tree carrying a count and a weight sum per rank.
class CountSumTree {
public:
    explicit CountSumTree(std::size_t size) : cnt_(size + 1, 0), sum_(size + 1, 0) {}

    void add(std::size_t rank, acc_t w) {
        for (std::size_t i = rank + 1; i < cnt_.size(); i += i & (~i + 1)) {
            ++cnt_[i];
            sum_[i] += w;
        }
    }

    // Count and sum over ranks <= rank.
    void prefix(std::size_t rank, std::size_t& count, acc_t& sum) const {
        count = 0;
        sum = 0;
        for (std::size_t i = rank + 1; i > 0; i -= i & (~i + 1)) {
            count += cnt_[i];
            sum += sum_[i];
        }
    }

private:
    std::vector<std::size_t> cnt_;
    std::vector<acc_t> sum_;
};

// For each element: sum_j (1 - G(max(x_i, x_j))), computed from the sorted
// order as N - (#{x_j <= x_i} G(x_i) + sum_{x_j > x_i} G(x_j)).
inline std::vector<acc_t> max_kernel_row_sums(const std::vector<double>& x, const std::vector<double>& g,
                                              const std::vector<std::size_t>& order) {
    const std::size_t N = x.size();
    std::vector<acc_t> suffix(N + 1, 0);
    for (std::size_t p = N; p-- > 0;) suffix[p] = suffix[p + 1] + g[order[p]];
    std::vector<acc_t> out(N);
    std::size_t p = 0;
    while (p < N) {
        std::size_t q = p;
        while (q < N && x[order[q]] == x[order[p]]) ++q;
        for (std::size_t r = p; r < q; ++r) {
            const std::size_t k = order[r];
            out[k] = static_cast<acc_t>(N) - (static_cast<acc_t>(q) * g[k] + suffix[q]);
        }
        p = q;
    }
    return out;
}

inline std::vector<std::size_t> sorted_order(const std::vector<double>& x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    return order;
}

}  // namespace detail

inline constexpr std::size_t tn_literal_max_n = 12;

/// Fully literal evaluator: double sums for A and both B factors, triple sum
/// for C. Oracle only.
inline StatValue tn_literal(const PairArrays& pairs, const WeightSpec& w) {
    detail::check_pairs(pairs);
    if (pairs.n > tn_literal_max_n) throw std::invalid_argument("tn_literal is gated to n <= 12");
    w.validate();
    using detail::acc_t;
    const std::size_t N = pairs.count();
    std::vector<double> kx(N * N), ky(N * N);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            kx[i * N + j] = 1.0 - w.cdf1(std::max(pairs.z[i], pairs.z[j]));
            ky[i * N + j] = 1.0 - w.cdf2(std::max(pairs.t[i], pairs.t[j]));
        }
    acc_t a = 0, bx = 0, by = 0, c = 0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            a += static_cast<acc_t>(kx[i * N + j]) * ky[i * N + j];
            bx += kx[i * N + j];
            by += ky[i * N + j];
            for (std::size_t k = 0; k < N; ++k) c += static_cast<acc_t>(kx[i * N + j]) * ky[i * N + k];
        }
    const acc_t NN = static_cast<acc_t>(N);
    return detail::assemble(pairs.n, a / (NN * NN), (bx / (NN * NN)) * (by / (NN * NN)), c / (NN * NN * NN));
}

/// O(N^2) evaluator: literal double sum for A, order statistics for B and
/// the row-sum factorization C = 1/N^3 sum_i u_i v_i.
inline StatValue tn_reference(const PairArrays& pairs, const WeightSpec& w) {
    detail::check_pairs(pairs);
    w.validate();
    using detail::acc_t;
    const std::size_t N = pairs.count();
    std::vector<acc_t> u(N, 0), v(N, 0);
    acc_t a = 0;
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
            const double gx = 1.0 - w.cdf1(std::max(pairs.z[i], pairs.z[j]));
            const double gy = 1.0 - w.cdf2(std::max(pairs.t[i], pairs.t[j]));
            a += static_cast<acc_t>(gx) * gy;
            u[i] += gx;
            v[i] += gy;
        }
    }
    acc_t c = 0;
    for (std::size_t i = 0; i < N; ++i) c += u[i] * v[i];
    const acc_t NN = static_cast<acc_t>(N);
    const acc_t b = detail::squared_rate_integral(pairs.z, w.mu1, w.sigma1) *
                    detail::squared_rate_integral(pairs.t, w.mu2, w.sigma2);
    return detail::assemble(pairs.n, a / (NN * NN), b, c / (NN * NN * NN));
}

/// O(N log N) evaluator.
///
/// A is swept over blocks of equal z in increasing order. For a block at
/// level z (kernel value 1 - G1(z)) it collects, for each member i,
/// sum over earlier j of (1 - G2(max(t_i, t_j))) from a Fenwick tree over
/// t-ranks holding counts and sums of 1 - G2(t): earlier t_j <= t_i
/// contribute count * (1 - G2(t_i)), larger ones their own value. Pairs
/// inside the block are summed from its t-sorted order.
inline StatValue tn_fast(const PairArrays& pairs, const WeightSpec& w) {
    detail::check_pairs(pairs);
    w.validate();
    using detail::acc_t;
    const std::size_t N = pairs.count();
    const auto& z = pairs.z;
    const auto& t = pairs.t;

    std::vector<double> gz(N), gt(N), bt(N);
    for (std::size_t k = 0; k < N; ++k) {
        gz[k] = w.cdf1(z[k]);
        gt[k] = w.cdf2(t[k]);
        bt[k] = 1.0 - gt[k];
    }
    const auto z_order = detail::sorted_order(z);
    const auto t_order = detail::sorted_order(t);

    // B from the order statistics (the sorted orders are already available).
    const acc_t NN = static_cast<acc_t>(N);
    acc_t sz = 0, st = 0;
    for (std::size_t p = 0; p < N; ++p) {
        sz += static_cast<acc_t>(2 * p + 1) * gz[z_order[p]];
        st += static_cast<acc_t>(2 * p + 1) * gt[t_order[p]];
    }
    const acc_t b = (1 - sz / (NN * NN)) * (1 - st / (NN * NN));

    // C from row sums.
    const auto u = detail::max_kernel_row_sums(z, gz, z_order);
    const auto v = detail::max_kernel_row_sums(t, gt, t_order);
    acc_t c = 0;
    for (std::size_t k = 0; k < N; ++k) c += u[k] * v[k];

    // Dense t-ranks (ties share a rank).
    std::vector<std::size_t> t_rank(N);
    std::size_t ranks = 0;
    for (std::size_t p = 0; p < N; ++p) {
        if (p && t[t_order[p]] != t[t_order[p - 1]]) ++ranks;
        t_rank[t_order[p]] = ranks;
    }
    ++ranks;

    detail::CountSumTree tree(ranks);
    acc_t total_b = 0;
    acc_t a = 0;
    std::vector<std::size_t> block;
    std::size_t p = 0;
    while (p < N) {
        std::size_t q = p;
        while (q < N && z[z_order[q]] == z[z_order[p]]) ++q;
        block.assign(z_order.begin() + static_cast<std::ptrdiff_t>(p), z_order.begin() + static_cast<std::ptrdiff_t>(q));

        acc_t cross = 0;
        for (std::size_t k : block) {
            std::size_t cnt_le = 0;
            acc_t sum_le = 0;
            tree.prefix(t_rank[k], cnt_le, sum_le);
            cross += static_cast<acc_t>(cnt_le) * bt[k] + (total_b - sum_le);
        }
        std::sort(block.begin(), block.end(), [&](std::size_t x, std::size_t y) { return t[x] < t[y]; });
        acc_t inner = 0;
        for (std::size_t r = 0; r < block.size(); ++r) inner += static_cast<acc_t>(2 * r + 1) * bt[block[r]];

        a += static_cast<acc_t>(1.0 - gz[block.front()]) * (2 * cross + inner);
        for (std::size_t k : block) {
            tree.add(t_rank[k], bt[k]);
            total_b += bt[k];
        }
        p = q;
    }
    return detail::assemble(pairs.n, a / (NN * NN), b, c / (NN * NN * NN));
}

/// sqrt(n) * sup_{r,s>0} |RR^{XY} - RR^X RR^Y|, exact.
///
/// The field is constant on r in (u_{a-1}, u_a] for consecutive distinct
/// distances u, so it suffices to evaluate the levels "pairs with z-rank < a"
/// for a = 0..K (a = K is the open cell above the maximum), and likewise in t.
inline StatValue tsup(const PairArrays& pairs) {
    detail::check_pairs(pairs);
    const std::size_t N = pairs.count();
    std::vector<double> uz(pairs.z), ut(pairs.t);
    std::sort(uz.begin(), uz.end());
    uz.erase(std::unique(uz.begin(), uz.end()), uz.end());
    std::sort(ut.begin(), ut.end());
    ut.erase(std::unique(ut.begin(), ut.end()), ut.end());
    const std::size_t K = uz.size();
    const std::size_t L = ut.size();

    std::vector<std::vector<std::size_t>> by_z_rank(K);
    std::vector<std::size_t> cnt_t(L, 0);
    for (std::size_t k = 0; k < N; ++k) {
        const auto a = static_cast<std::size_t>(std::lower_bound(uz.begin(), uz.end(), pairs.z[k]) - uz.begin());
        const auto b = static_cast<std::size_t>(std::lower_bound(ut.begin(), ut.end(), pairs.t[k]) - ut.begin());
        by_z_rank[a].push_back(b);
        ++cnt_t[b];
    }
    // rate_y[b] = fraction of pairs with t-rank < b, b = 0..L.
    std::vector<double> rate_y(L + 1, 0.0);
    {
        std::size_t run = 0;
        for (std::size_t b = 0; b < L; ++b) {
            run += cnt_t[b];
            rate_y[b + 1] = static_cast<double>(run) / static_cast<double>(N);
        }
    }

    const double invN = 1.0 / static_cast<double>(N);
    std::vector<std::size_t> joint_col(L, 0);  // pairs with z-rank < a, per t-rank
    std::size_t below_x = 0;
    double best = 0.0;
    for (std::size_t a = 1; a <= K; ++a) {
        for (std::size_t b : by_z_rank[a - 1]) ++joint_col[b];
        below_x += by_z_rank[a - 1].size();
        const double rx = static_cast<double>(below_x) * invN;
        std::size_t run = 0;
        for (std::size_t b = 1; b <= L; ++b) {
            run += joint_col[b - 1];
            const double d = std::abs(static_cast<double>(run) * invN - rx * rate_y[b]);
            best = std::max(best, d);
        }
    }
    StatValue out;
    out.kind = StatKind::sup;
    out.t = std::sqrt(static_cast<double>(pairs.n)) * best;
    return out;
}

namespace detail {

struct QuadCell {
    double mid;
    double mass;
};

// Cells over [max(0, mu - 6 sigma), mu + 6 sigma]. With `align`, every
// distinct distance inside the range becomes a cell edge so the step
// integrand is constant per cell, and each cell's weight is integrated with
// 5-point Gauss-Legendre on the density; otherwise plain midpoint rule.
inline std::vector<QuadCell> quadrature_cells(double mu, double sigma, std::size_t resolution, bool align,
                                              const std::vector<double>& distances) {
    const double lo = std::max(0.0, mu - 6.0 * sigma);
    const double hi = mu + 6.0 * sigma;
    std::vector<QuadCell> cells;
    if (!(hi > lo)) return cells;
    std::vector<double> edges(resolution + 1);
    for (std::size_t i = 0; i <= resolution; ++i)
        edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution);
    if (align) {
        for (double d : distances)
            if (d > lo && d < hi) edges.push_back(d);
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
    static constexpr double gl_x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                       0.9061798459386640};
    static constexpr double gl_w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                       0.4786286704993665, 0.2369268850561891};
    cells.reserve(edges.size());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = edges[i], b = edges[i + 1];
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double mass = 0.0;
        if (align) {
            for (int q = 0; q < 5; ++q) mass += gl_w[q] * gaussian_pdf(mu, sigma, mid + half * gl_x[q]);
            mass *= half;
        } else {
            mass = gaussian_pdf(mu, sigma, mid) * (b - a);
        }
        cells.push_back({mid, mass});
    }
    return cells;
}

}  // namespace detail

/// Direct 2D quadrature of the defining integral. Rates are recounted at
/// every cell midpoint. Oracle only.
inline double tn_quadrature(const PairArrays& pairs, const WeightSpec& w, std::size_t grid_resolution,
                            bool align_breakpoints = true) {
    detail::check_pairs(pairs);
    w.validate();
    if (grid_resolution < 50) throw std::invalid_argument("tn_quadrature needs grid_resolution >= 50");
    const auto rc = detail::quadrature_cells(w.mu1, w.sigma1, grid_resolution, align_breakpoints, pairs.z);
    const auto sc = detail::quadrature_cells(w.mu2, w.sigma2, grid_resolution, align_breakpoints, pairs.t);
    const std::size_t N = pairs.count();
    const double invN = 1.0 / static_cast<double>(N);

    std::vector<double> rx(rc.size()), ry(sc.size());
    for (std::size_t a = 0; a < rc.size(); ++a) {
        std::size_t c = 0;
        for (double v : pairs.z) c += v < rc[a].mid;
        rx[a] = static_cast<double>(c) * invN;
    }
    for (std::size_t b = 0; b < sc.size(); ++b) {
        std::size_t c = 0;
        for (double v : pairs.t) c += v < sc[b].mid;
        ry[b] = static_cast<double>(c) * invN;
    }
    long double total = 0.0L;
    std::vector<char> in_r(N);
    for (std::size_t a = 0; a < rc.size(); ++a) {
        for (std::size_t k = 0; k < N; ++k) in_r[k] = pairs.z[k] < rc[a].mid;
        for (std::size_t b = 0; b < sc.size(); ++b) {
            std::size_t c = 0;
            for (std::size_t k = 0; k < N; ++k) c += in_r[k] && pairs.t[k] < sc[b].mid;
            const double diff = static_cast<double>(c) * invN - rx[a] * ry[b];
            total += static_cast<long double>(diff * diff) * rc[a].mass * sc[b].mass;
        }
    }
    return static_cast<double>(static_cast<long double>(pairs.n) * total);
}

/// Dispatch used by the permutation engine.
inline StatValue evaluate(const PairArrays& pairs, const WeightSpec& w, StatKind kind) {
    return kind == StatKind::cvm ? tn_fast(pairs, w) : tsup(pairs);
}

}  // namespace rrind
