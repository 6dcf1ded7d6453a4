#pragma once

// Recurrence rates, the process E_n, the order-4 U-process E'_n and the
// discrepancy H_n = E'_n - E_n.
//
// All indicators use strict inequality: a pair recurs at radius r iff its
// distance is < r. Rates are therefore left-continuous step functions, and a
// probe radius equal to a distance value does not count that distance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rrind/core.hpp"

namespace rrind {

inline double rr_x(const PairArrays& pairs, double r) {
    std::size_t c = 0;
    for (double v : pairs.z) c += v < r;
    return static_cast<double>(c) / static_cast<double>(pairs.count());
}

inline double rr_y(const PairArrays& pairs, double s) {
    std::size_t c = 0;
    for (double v : pairs.t) c += v < s;
    return static_cast<double>(c) / static_cast<double>(pairs.count());
}

inline double rr_joint(const PairArrays& pairs, double r, double s) {
    std::size_t c = 0;
    for (std::size_t k = 0; k < pairs.count(); ++k) c += (pairs.z[k] < r) && (pairs.t[k] < s);
    return static_cast<double>(c) / static_cast<double>(pairs.count());
}

inline double en(const PairArrays& pairs, double r, double s) {
    const double n = static_cast<double>(pairs.n);
    return std::sqrt(n) * (rr_joint(pairs, r, s) - rr_x(pairs, r) * rr_y(pairs, s));
}

/// E_n evaluated on a tensor grid; values are row-major (r index major).
struct EnGrid {
    std::vector<double> r_grid;
    std::vector<double> s_grid;
    std::vector<double> values;

    double operator()(std::size_t a, std::size_t b) const { return values[a * s_grid.size() + b]; }
};

namespace detail {

inline void check_grid(std::span<const double> g, const char* name) {
    if (g.empty()) throw std::invalid_argument(std::string(name) + " must be non-empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
        if (i && !(g[i] > g[i - 1])) throw std::invalid_argument(std::string(name) + " must be strictly increasing");
    }
}

}  // namespace detail

/// One sort per side plus a 2D cumulative count over grid-cell indices.
inline EnGrid en_grid(const PairArrays& pairs, std::span<const double> r_grid, std::span<const double> s_grid) {
    detail::check_grid(r_grid, "r_grid");
    detail::check_grid(s_grid, "s_grid");
    const std::size_t R = r_grid.size();
    const std::size_t S = s_grid.size();
    const std::size_t N = pairs.count();

    // A pair with distance z contributes at every grid index >= first(r > z).
    std::vector<std::size_t> counts((R + 1) * (S + 1), 0);
    std::vector<std::size_t> cx(R + 1, 0), cy(S + 1, 0);
    for (std::size_t k = 0; k < N; ++k) {
        const auto a = static_cast<std::size_t>(std::upper_bound(r_grid.begin(), r_grid.end(), pairs.z[k]) - r_grid.begin());
        const auto b = static_cast<std::size_t>(std::upper_bound(s_grid.begin(), s_grid.end(), pairs.t[k]) - s_grid.begin());
        ++counts[a * (S + 1) + b];
        ++cx[a];
        ++cy[b];
    }
    for (std::size_t a = 0; a <= R; ++a)
        for (std::size_t b = 0; b <= S; ++b) {
            std::size_t v = counts[a * (S + 1) + b];
            if (a) v += counts[(a - 1) * (S + 1) + b];
            if (b) v += counts[a * (S + 1) + b - 1];
            if (a && b) v -= counts[(a - 1) * (S + 1) + b - 1];
            counts[a * (S + 1) + b] = v;
        }
    for (std::size_t a = 1; a <= R; ++a) cx[a] += cx[a - 1];
    for (std::size_t b = 1; b <= S; ++b) cy[b] += cy[b - 1];

    EnGrid out;
    out.r_grid.assign(r_grid.begin(), r_grid.end());
    out.s_grid.assign(s_grid.begin(), s_grid.end());
    out.values.resize(R * S);
    const double inv = 1.0 / static_cast<double>(N);
    const double root_n = std::sqrt(static_cast<double>(pairs.n));
    for (std::size_t a = 0; a < R; ++a)
        for (std::size_t b = 0; b < S; ++b) {
            const double joint = static_cast<double>(counts[a * (S + 1) + b]) * inv;
            const double px = static_cast<double>(cx[a]) * inv;
            const double py = static_cast<double>(cy[b]) * inv;
            out.values[a * S + b] = root_n * (joint - px * py);
        }
    return out;
}

inline constexpr std::size_t en_prime_max_n = 12;

/// Order-4 U-process approximating E_n. Cost O(n^4); test-oracle use only.
inline double en_prime(const DistanceMatrix& dx, const DistanceMatrix& dy, double r, double s) {
    const std::size_t n = dx.size();
    if (dy.size() != n) throw std::invalid_argument("distance matrices differ in size");
    if (n < 4) throw std::invalid_argument("en_prime needs n >= 4");
    if (n > en_prime_max_n) throw std::invalid_argument("en_prime is gated to n <= 12");
    long long acc = 0;
    long long terms = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const bool xr = dx(i, j) < r;
            const bool both = xr && dy(i, j) < s;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                for (std::size_t h = 0; h < n; ++h) {
                    if (h == i || h == j || h == k) continue;
                    acc += static_cast<int>(both) - static_cast<int>(xr && dy(h, k) < s);
                    ++terms;
                }
            }
        }
    return std::sqrt(static_cast<double>(n)) * static_cast<double>(acc) / static_cast<double>(terms);
}

struct HnCheck {
    double hn = 0.0;     ///< E'_n - E_n
    double bound = 0.0;  ///< 4 / sqrt(n)
    bool ok = false;     ///< 0 <= hn <= bound (1e-12 slack)
    bool abs_ok = false; ///< |hn| <= bound (1e-12 slack)
};

inline HnCheck hn_check(const DistanceMatrix& dx, const DistanceMatrix& dy, double r, double s) {
    const double ep = en_prime(dx, dy, r, s);
    const double e = en(pair_arrays(dx, dy), r, s);
    HnCheck out;
    out.hn = ep - e;
    out.bound = 4.0 / std::sqrt(static_cast<double>(dx.size()));
    constexpr double slack = 1e-12;
    out.ok = out.hn >= -slack && out.hn <= out.bound + slack;
    out.abs_ok = std::abs(out.hn) <= out.bound + slack;
    return out;
}

}  // namespace rrind
