#pragma once

// Normal-scores transform: each coordinate is replaced by the standard
// normal quantile of its empirical rank, putting both marginals on the same
// N(0,1) scale.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "rrind/core.hpp"

namespace rrind {

inline double std_normal_quantile(double p) {
    static const boost::math::normal_distribution<double> unit;
    return boost::math::quantile(unit, p);
}

/// Average ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t p = 0;
    while (p < n) {
        std::size_t q = p;
        while (q < n && xs[order[q]] == xs[order[p]]) ++q;
        const double avg = 0.5 * static_cast<double>(p + 1 + q);
        for (std::size_t r = p; r < q; ++r) ranks[order[r]] = avg;
        p = q;
    }
    return ranks;
}

/// Phi^{-1}(R_i / (n + 1)).
inline std::vector<double> normal_scores(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("normal_scores needs n >= 2");
    const auto ranks = average_ranks(xs);
    const double denom = static_cast<double>(xs.size() + 1);
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = std_normal_quantile(ranks[i] / denom);
    return out;
}

/// Coordinate-wise normal scores of a point cloud.
inline std::vector<Point> normal_scores(const std::vector<Point>& pts) {
    if (pts.size() < 2) throw std::invalid_argument("normal_scores needs n >= 2");
    const std::size_t dim = pts.front().size();
    std::vector<Point> out(pts.size(), Point(dim));
    std::vector<double> column(pts.size());
    for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t i = 0; i < pts.size(); ++i) column[i] = pts[i].at(k);
        const auto scored = normal_scores(std::span<const double>(column));
        for (std::size_t i = 0; i < pts.size(); ++i) out[i][k] = scored[i];
    }
    return out;
}

inline PairedSample normal_scores(const PairedSample& s) {
    s.validate();
    PairedSample out = s;
    out.xs = normal_scores(s.xs);
    out.ys = normal_scores(s.ys);
    return out;
}

}  // namespace rrind
