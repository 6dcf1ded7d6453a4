#pragma once

// Permutation calibration. Distance matrices are computed once; each
// replicate re-pairs x_{sigma(i)} with y_i by re-indexing. Replicate r draws
// its permutation from an RNG seeded with derive_seed(seed, r), and results
// are reduced as integer counts, so output is identical for any worker count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rrind/core.hpp"
#include "rrind/parallel.hpp"
#include "rrind/statistic.hpp"
#include "rrind/transform.hpp"
#include "rrind/weights.hpp"

namespace rrind {

/// paper:    p = (1/m) #{Z_i >= t_obs}
/// plus_one: p = (1 + #{Z_i >= t_obs}) / (m + 1), valid at finite m
enum class PValueEstimator { paper, plus_one };

inline const char* to_string(PValueEstimator e) { return e == PValueEstimator::paper ? "paper" : "plus_one"; }

inline double p_value_from_count(std::size_t exceed, std::size_t m, PValueEstimator e) {
    if (e == PValueEstimator::paper) return static_cast<double>(exceed) / static_cast<double>(m);
    return static_cast<double>(exceed + 1) / static_cast<double>(m + 1);
}

/// Replicate values within this relative slack of t_obs count as ties
/// (">="), so a re-pairing that reproduces the observed statistic up to
/// summation-order rounding is not missed.
inline bool at_least(double value, double t_obs) {
    return value >= t_obs - 1e-12 * std::max(1.0, std::abs(t_obs));
}

struct TestResult {
    StatValue statistic;
    double p_value = 1.0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    PValueEstimator estimator = PValueEstimator::paper;
    WeightSpec weight;
    std::size_t exceedances = 0;
    std::size_t n = 0;
    std::chrono::duration<double> elapsed{0.0};
};

/// Number of replicates r in [0, m) with stat(sigma_r) >= t_obs.
template <class StatFn>
std::size_t count_exceedances(std::size_t n, std::size_t m, std::uint64_t seed, double t_obs, unsigned threads,
                              StatFn&& stat_of_permutation) {
    std::vector<char> hit(m, 0);
    parallel_for(m, threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        std::vector<std::size_t> sigma;
        random_permutation(sigma, n, rng);
        hit[r] = at_least(stat_of_permutation(sigma), t_obs) ? 1 : 0;
    });
    std::size_t c = 0;
    for (char h : hit) c += static_cast<std::size_t>(h);
    return c;
}

inline constexpr std::size_t min_permutations = 19;

inline TestResult permutation_pvalue(const DistanceMatrix& dx, const DistanceMatrix& dy, const WeightSpec& w,
                                     StatKind kind, std::size_t m, std::uint64_t seed,
                                     PValueEstimator estimator = PValueEstimator::paper, unsigned threads = 1) {
    const auto start = std::chrono::steady_clock::now();
    if (dx.size() != dy.size()) throw std::invalid_argument("distance matrices differ in size");
    const std::size_t n = dx.size();
    if (n < 4) throw std::invalid_argument("permutation test needs n >= 4");
    if (m < min_permutations) throw std::invalid_argument("permutation test needs m >= 19");
    if (kind == StatKind::cvm) w.validate();

    const PairArrays observed = pair_arrays(dx, dy);
    TestResult out;
    out.statistic = evaluate(observed, w, kind);
    out.m = m;
    out.seed = seed;
    out.estimator = estimator;
    out.weight = w;
    out.n = n;
    out.exceedances = count_exceedances(n, m, seed, out.statistic.t, threads, [&](const std::vector<std::size_t>& sigma) {
        thread_local PairArrays scratch;
        repair_into(dx, dy, sigma, scratch);
        return evaluate(scratch, w, kind).t;
    });
    out.p_value = p_value_from_count(out.exceedances, m, estimator);
    out.elapsed = std::chrono::steady_clock::now() - start;
    return out;
}

/// Weights resolved from the observed pairs. Data-driven weights depend only
/// on the distance multisets, which re-pairing leaves unchanged.
inline TestResult permutation_pvalue(const DistanceMatrix& dx, const DistanceMatrix& dy, const WeightChoice& choice,
                                     StatKind kind, std::size_t m, std::uint64_t seed,
                                     PValueEstimator estimator = PValueEstimator::paper, unsigned threads = 1) {
    WeightSpec w;
    if (kind == StatKind::cvm) w = choice.resolve(pair_arrays(dx, dy));
    return permutation_pvalue(dx, dy, w, kind, m, seed, estimator, threads);
}

/// How a raw sample is turned into a statistic value.
struct StatisticPipeline {
    bool normal_scores = true;
    WeightChoice weights;
    StatKind kind = StatKind::cvm;

    double operator()(const PairedSample& raw) const {
        const PairedSample s = normal_scores ? rrind::normal_scores(raw) : raw;
        const auto [dx, dy] = distance_matrices(s);
        const PairArrays pa = pair_arrays(dx, dy);
        if (kind == StatKind::sup) return tsup(pa).t;
        return tn_fast(pa, weights.resolve(pa)).t;
    }
};

/// Produces a null sample of size n from a seed.
using NullSampler = std::function<PairedSample(std::size_t n, std::uint64_t seed)>;

/// Independent N(0,1) marginals of the given dimensions.
inline NullSampler independent_normal_sampler(std::size_t dim_x = 1, std::size_t dim_y = 1) {
    return [dim_x, dim_y](std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        PairedSample s;
        s.xs.assign(n, Point(dim_x));
        s.ys.assign(n, Point(dim_y));
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : s.xs[i]) v = g(rng);
            for (auto& v : s.ys[i]) v = g(rng);
        }
        s.metric_x = dim_x == 1 ? Metric::absolute : Metric::euclidean;
        s.metric_y = dim_y == 1 ? Metric::absolute : Metric::euclidean;
        return s;
    };
}

/// Empirical quantile of order q: the ceil(q * size)-th smallest value
/// (inverse of the empirical CDF).
inline double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile of an empty sample");
    if (!(q > 0.0) || !(q <= 1.0)) throw std::invalid_argument("quantile order must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()) - 1e-12));
    k = std::clamp<std::size_t>(k, 1, values.size());
    return values[k - 1];
}

struct CriticalValue {
    double threshold = 0.0;
    std::vector<double> null_values;  ///< in replicate order
};

/// (1 - level) quantile of the statistic over `reps` null samples; replicate r
/// uses derive_seed(seed, r). Reject when the statistic exceeds the threshold.
inline CriticalValue critical_value(const NullSampler& null_sampler, std::size_t n, const StatisticPipeline& pipeline,
                                    double level, std::size_t reps, std::uint64_t seed, unsigned threads = 1) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
    if (reps < 100) throw std::invalid_argument("critical_value needs reps >= 100");
    CriticalValue out;
    out.null_values.assign(reps, 0.0);
    parallel_for(reps, threads, [&](std::size_t r) {
        out.null_values[r] = pipeline(null_sampler(n, derive_seed(seed, r)));
    });
    out.threshold = empirical_quantile(out.null_values, 1.0 - level);
    return out;
}

}  // namespace rrind
