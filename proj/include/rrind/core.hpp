#pragma once

// Paired samples in metric spaces and the shared-index pair-distance arrays
// consumed by every statistic in the library.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rrind {

using Point = std::vector<double>;

enum class Metric { euclidean, absolute, precomputed };

inline const char* to_string(Metric m) {
    switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::absolute: return "absolute";
    case Metric::precomputed: return "precomputed";
    }
    return "?";
}

/// Square, symmetric, zero-diagonal matrix of nonnegative finite distances.
class DistanceMatrix {
public:
    DistanceMatrix() = default;

    /// Takes ownership of a row-major n*n buffer and validates it.
    /// `tolerance` bounds the allowed asymmetry and diagonal deviation; the
    /// stored matrix is exactly symmetrized (upper triangle wins).
    DistanceMatrix(std::size_t n, std::vector<double> data, double tolerance = 0.0)
        : n_(n), d_(std::move(data)) {
        if (n_ < 2) throw std::invalid_argument("distance matrix needs n >= 2");
        if (d_.size() != n_ * n_) throw std::invalid_argument("distance matrix buffer must hold n*n entries");
        for (std::size_t i = 0; i < n_; ++i) {
            if (std::abs(d_[i * n_ + i]) > tolerance)
                throw std::invalid_argument("distance matrix diagonal must be zero (row " + std::to_string(i) + ")");
            d_[i * n_ + i] = 0.0;
            for (std::size_t j = i + 1; j < n_; ++j) {
                const double a = d_[i * n_ + j];
                const double b = d_[j * n_ + i];
                if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || b < 0.0)
                    throw std::invalid_argument("distance matrix entries must be finite and nonnegative");
                if (std::abs(a - b) > tolerance)
                    throw std::invalid_argument("distance matrix is not symmetric at (" + std::to_string(i) + "," +
                                                std::to_string(j) + ")");
                d_[j * n_ + i] = a;
            }
        }
    }

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const noexcept { return {d_.data() + i * n_, n_}; }
    const std::vector<double>& data() const noexcept { return d_; }

    /// True when every off-diagonal distance is identical.
    bool is_constant() const noexcept {
        const double first = d_[1];
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                if (i != j && d_[i * n_ + j] != first) return false;
        return true;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

/// n paired observations (x_i, y_i) with per-side metric choice.
struct PairedSample {
    std::vector<Point> xs;
    std::vector<Point> ys;
    Metric metric_x = Metric::euclidean;
    Metric metric_y = Metric::euclidean;

    std::size_t size() const noexcept { return xs.size(); }
    std::size_t dim_x() const noexcept { return xs.empty() ? 0 : xs.front().size(); }
    std::size_t dim_y() const noexcept { return ys.empty() ? 0 : ys.front().size(); }

    void validate() const {
        if (xs.size() != ys.size()) throw std::invalid_argument("xs and ys must have equal length");
        if (xs.size() < 2) throw std::invalid_argument("a paired sample needs n >= 2");
        check_side(xs, "x");
        check_side(ys, "y");
    }

private:
    static void check_side(const std::vector<Point>& pts, const char* side) {
        const std::size_t p = pts.front().size();
        if (p == 0) throw std::invalid_argument(std::string("points in ") + side + " have dimension 0");
        for (const auto& pt : pts)
            if (pt.size() != p) throw std::invalid_argument(std::string("dimension mismatch in ") + side);
    }
};

/// Wraps scalars as one-dimensional points.
inline std::vector<Point> as_points(std::span<const double> values) {
    std::vector<Point> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(Point{v});
    return out;
}

inline DistanceMatrix distance_matrix(const std::vector<Point>& points, Metric metric) {
    if (points.size() < 2) throw std::invalid_argument("distance_matrix needs at least 2 points");
    if (metric == Metric::precomputed)
        throw std::invalid_argument("precomputed metric requires a distance table, not points");
    const std::size_t n = points.size();
    const std::size_t p = points.front().size();
    if (p == 0) throw std::invalid_argument("points must have dimension >= 1");
    for (const auto& pt : points) {
        if (pt.size() != p) throw std::invalid_argument("dimension mismatch between points");
        for (double c : pt)
            if (!std::isfinite(c)) throw std::invalid_argument("non-finite coordinate");
    }
    if (metric == Metric::absolute && p != 1)
        throw std::invalid_argument("absolute metric requires one-dimensional points");

    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v;
            if (metric == Metric::absolute) {
                v = std::abs(points[i][0] - points[j][0]);
            } else {
                double acc = 0.0;
                for (std::size_t k = 0; k < p; ++k) {
                    const double diff = points[i][k] - points[j][k];
                    acc += diff * diff;
                }
                v = std::sqrt(acc);
            }
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    return DistanceMatrix(n, std::move(d));
}

/// Ordered pair of distinct observation indices.
struct IndexPair {
    std::size_t i;
    std::size_t j;
};

/// The N = n(n-1) ordered-pair distances. z[k] and t[k] refer to the same
/// pair_index[k]. Canonical order is row-major over (i, j), i != j:
/// (0,1), (0,2), ..., (0,n-1), (1,0), (1,2), ...
struct PairArrays {
    std::size_t n = 0;
    std::vector<IndexPair> pair_index;
    std::vector<double> z;
    std::vector<double> t;

    std::size_t count() const noexcept { return z.size(); }
};

namespace detail {

inline std::vector<IndexPair> canonical_pairs(std::size_t n) {
    std::vector<IndexPair> out;
    out.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) out.push_back({i, j});
    return out;
}

}  // namespace detail

inline void validate_permutation(std::span<const std::size_t> sigma, std::size_t n) {
    if (sigma.size() != n) throw std::invalid_argument("permutation length does not match sample size");
    std::vector<char> seen(n, 0);
    for (std::size_t v : sigma) {
        if (v >= n || seen[v]) throw std::invalid_argument("invalid permutation");
        seen[v] = 1;
    }
}

/// Pair arrays for the resample (x_{sigma(i)}, y_i). Only re-indexes; no
/// distance is recomputed. `sigma` is zero-based.
inline PairArrays repair_under_permutation(const DistanceMatrix& dx, const DistanceMatrix& dy,
                                           std::span<const std::size_t> sigma) {
    if (dx.size() != dy.size()) throw std::invalid_argument("distance matrices differ in size");
    const std::size_t n = dx.size();
    validate_permutation(sigma, n);
    PairArrays out;
    out.n = n;
    out.pair_index = detail::canonical_pairs(n);
    out.z.reserve(out.pair_index.size());
    out.t.reserve(out.pair_index.size());
    for (const auto& [i, j] : out.pair_index) {
        out.z.push_back(dx(sigma[i], sigma[j]));
        out.t.push_back(dy(i, j));
    }
    return out;
}

/// Fills only the z/t arrays of `out` for a permuted pairing; reuses its
/// storage. Used by the permutation engine's inner loop.
inline void repair_into(const DistanceMatrix& dx, const DistanceMatrix& dy, std::span<const std::size_t> sigma,
                        PairArrays& out) {
    const std::size_t n = dx.size();
    out.n = n;
    out.z.resize(n * (n - 1));
    out.t.resize(n * (n - 1));
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t si = sigma[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            out.z[k] = dx(si, sigma[j]);
            out.t[k] = dy(i, j);
            ++k;
        }
    }
}

inline PairArrays pair_arrays(const DistanceMatrix& dx, const DistanceMatrix& dy) {
    if (dx.size() != dy.size()) throw std::invalid_argument("distance matrices differ in size");
    const std::size_t n = dx.size();
    PairArrays out;
    out.n = n;
    out.pair_index = detail::canonical_pairs(n);
    out.z.reserve(out.pair_index.size());
    out.t.reserve(out.pair_index.size());
    for (const auto& [i, j] : out.pair_index) {
        out.z.push_back(dx(i, j));
        out.t.push_back(dy(i, j));
    }
    return out;
}

/// Distance matrices for both sides of a sample.
inline std::pair<DistanceMatrix, DistanceMatrix> distance_matrices(const PairedSample& s) {
    s.validate();
    return {distance_matrix(s.xs, s.metric_x), distance_matrix(s.ys, s.metric_y)};
}

}  // namespace rrind
