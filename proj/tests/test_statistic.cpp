#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "rrind/core.hpp"
#include "rrind/parallel.hpp"
#include "rrind/recurrence.hpp"
#include "rrind/statistic.hpp"
#include "rrind/weights.hpp"

using namespace rrind;

namespace {

std::vector<double> unique_sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// E_n is constant on cells (u_a, u_{a+1}] x (v_b, v_{b+1}] between
// consecutive distinct distances and zero below the smallest one, so the
// defining integral is a finite sum of cell values times G-masses.
double tn_cell_integral(const PairArrays& pa, const WeightSpec& w) {
    const auto u = unique_sorted(pa.z);
    const auto v = unique_sorted(pa.t);
    long double total = 0.0L;
    for (std::size_t a = 0; a < u.size(); ++a) {
        const double r_probe = a + 1 < u.size() ? 0.5 * (u[a] + u[a + 1]) : u[a] + 1.0;
        const double mass_r = (a + 1 < u.size() ? w.cdf1(u[a + 1]) : 1.0) - w.cdf1(u[a]);
        for (std::size_t b = 0; b < v.size(); ++b) {
            const double s_probe = b + 1 < v.size() ? 0.5 * (v[b] + v[b + 1]) : v[b] + 1.0;
            const double mass_s = (b + 1 < v.size() ? w.cdf2(v[b + 1]) : 1.0) - w.cdf2(v[b]);
            const double e = en(pa, r_probe, s_probe);
            total += static_cast<long double>(e) * e * mass_r * mass_s;
        }
    }
    return static_cast<double>(total);
}

// Max of |E_n| over one probe per cell, which is exact for a step field.
double tsup_cell_scan(const PairArrays& pa) {
    const auto u = unique_sorted(pa.z);
    const auto v = unique_sorted(pa.t);
    double best = 0.0;
    for (std::size_t a = 0; a < u.size(); ++a) {
        const double r = a + 1 < u.size() ? 0.5 * (u[a] + u[a + 1]) : u[a] + 1.0;
        for (std::size_t b = 0; b < v.size(); ++b) {
            const double s = b + 1 < v.size() ? 0.5 * (v[b] + v[b + 1]) : v[b] + 1.0;
            best = std::max(best, std::abs(en(pa, r, s)));
        }
    }
    return best;
}

PairArrays random_pairs(std::uint64_t seed, std::size_t n, std::size_t dim, int support = 0) {
    Rng rng(seed);
    std::normal_distribution<double> g;
    std::uniform_int_distribution<int> pick(0, std::max(support - 1, 0));
    std::vector<Point> xs(n, Point(dim)), ys(n, Point(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < dim; ++k) {
            xs[i][k] = support > 0 ? static_cast<double>(pick(rng)) : g(rng);
            ys[i][k] = 0.5 * xs[i][k] * xs[i][k] + g(rng);
        }
    const Metric m = dim == 1 ? Metric::absolute : Metric::euclidean;
    return pair_arrays(distance_matrix(xs, m), distance_matrix(ys, m));
}

double rel(double a, double b) { return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST(Statistic, ConstantXIsZero) {
    Rng rng(1);
    std::normal_distribution<double> g;
    std::vector<double> y(9);
    for (auto& v : y) v = g(rng);
    const auto pa =
        pair_arrays(distance_matrix(as_points(std::vector<double>(9, 3.0)), Metric::absolute),
                    distance_matrix(as_points(y), Metric::absolute));
    const auto w = WeightSpec::fixed(1, 1);
    EXPECT_NEAR(tn_reference(pa, w).t, 0.0, 1e-10);
    EXPECT_NEAR(tn_fast(pa, w).t, 0.0, 1e-10);
    EXPECT_NEAR(tn_literal(pa, w).t, 0.0, 1e-10);
    EXPECT_NEAR(tsup(pa).t, 0.0, 1e-12);
    EXPECT_NEAR(tn_quadrature(pa, w, 100), 0.0, 1e-12);
}

TEST(Statistic, ReferenceMatchesLiteral) {
    for (std::uint64_t k = 0; k < 30; ++k) {
        const auto pa = random_pairs(100 + k, 4 + k % 5, k % 2 ? 5 : 1);
        const auto w = WeightSpec::fixed(0.5 + 0.1 * static_cast<double>(k % 7), 1.0 + static_cast<double>(k % 3),
                                         1.0, 2.0);
        EXPECT_LE(rel(tn_reference(pa, w).t, tn_literal(pa, w).t), 1e-10) << "sample " << k;
    }
}

TEST(Statistic, ReferenceMatchesCellIntegral) {
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto pa = random_pairs(200 + k, 4 + k % 6, 1, k % 2 ? 3 : 0);
        const auto w = WeightSpec::fixed(1.0, 1.0, 0.0, 4.0);
        EXPECT_LE(rel(tn_reference(pa, w).t, tn_cell_integral(pa, w)), 1e-10);
    }
}

TEST(Statistic, FastMatchesReference) {
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto pa = random_pairs(300 + k, 4 + k % 9, k % 3 == 1 ? 5 : 1, k % 3 == 2 ? 3 : 0);
        const auto w = WeightSpec::fixed(1.0, 1.0 + static_cast<double>(k % 4));
        const double ref = tn_reference(pa, w).t;
        EXPECT_LE(std::abs(tn_fast(pa, w).t - ref) / std::max(1.0, ref), 1e-9) << "sample " << k;
        EXPECT_LE(rel(tn_fast(pa, w).t, ref), 1e-9) << "sample " << k;
    }
}

TEST(Statistic, FastHandlesHeavyTiesOnBothSides) {
    for (std::uint64_t k = 0; k < 20; ++k) {
        Rng rng(400 + k);
        std::uniform_int_distribution<int> pick(0, 2);
        std::vector<double> x(11), y(11);
        for (std::size_t i = 0; i < 11; ++i) {
            x[i] = pick(rng);
            y[i] = pick(rng);
        }
        const auto pa = pair_arrays(distance_matrix(as_points(x), Metric::absolute),
                                    distance_matrix(as_points(y), Metric::absolute));
        const auto w = WeightSpec::fixed(1, 1);
        EXPECT_LE(std::abs(tn_fast(pa, w).t - tn_reference(pa, w).t), 1e-12);
    }
}

TEST(Statistic, AbcAssembly) {
    const auto pa = random_pairs(7, 10, 1);
    const auto w = WeightSpec::fixed(1, 1);
    for (const auto& v : {tn_reference(pa, w), tn_fast(pa, w), tn_literal(pa, w)}) {
        ASSERT_TRUE(v.abc.has_value());
        EXPECT_NEAR(v.t, 10.0 * (v.abc->a + v.abc->b - 2.0 * v.abc->c), 1e-12);
        EXPECT_GE(v.t, 0.0);
        EXPECT_EQ(v.kind, StatKind::cvm);
    }
}

TEST(Statistic, PairOrderInvariance) {
    auto pa = random_pairs(8, 12, 1, 4);
    const auto w = WeightSpec::fixed(1, 4);
    const double before = tn_fast(pa, w).t;
    std::vector<std::size_t> order(pa.count());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(3);
    std::shuffle(order.begin(), order.end(), rng);
    PairArrays shuffled = pa;
    for (std::size_t k = 0; k < order.size(); ++k) {
        shuffled.z[k] = pa.z[order[k]];
        shuffled.t[k] = pa.t[order[k]];
        shuffled.pair_index[k] = pa.pair_index[order[k]];
    }
    EXPECT_NEAR(tn_fast(shuffled, w).t, before, 1e-12);
    EXPECT_NEAR(tn_reference(shuffled, w).t, before, 1e-12);
}

TEST(Statistic, RelabelInvariance) {
    Rng rng(9);
    std::normal_distribution<double> g;
    std::vector<Point> xs(10, Point(2)), ys(10, Point(1));
    for (std::size_t i = 0; i < 10; ++i) {
        xs[i] = {g(rng), g(rng)};
        ys[i] = {xs[i][0] * xs[i][1] + g(rng)};
    }
    std::vector<std::size_t> p{4, 9, 0, 2, 7, 1, 8, 3, 5, 6};
    std::vector<Point> xr(10), yr(10);
    for (std::size_t i = 0; i < 10; ++i) {
        xr[i] = xs[p[i]];
        yr[i] = ys[p[i]];
    }
    const auto w = WeightSpec::fixed(1, 1);
    const double a =
        tn_fast(pair_arrays(distance_matrix(xs, Metric::euclidean), distance_matrix(ys, Metric::absolute)), w).t;
    const double b =
        tn_fast(pair_arrays(distance_matrix(xr, Metric::euclidean), distance_matrix(yr, Metric::absolute)), w).t;
    EXPECT_NEAR(a, b, 1e-12);
}

TEST(Statistic, QuadratureMatchesReference) {
    for (std::uint64_t k = 0; k < 5; ++k) {
        const auto pa = random_pairs(500 + k, 6, 1);
        const auto w = WeightSpec::fixed(1, 1);
        EXPECT_LE(rel(tn_quadrature(pa, w, 400), tn_reference(pa, w).t), 1e-3);
    }
    EXPECT_THROW(tn_quadrature(random_pairs(1, 5, 1), WeightSpec::fixed(1, 1), 49), std::invalid_argument);
}

TEST(Statistic, QuadratureConvergesWithoutAlignment) {
    const auto w = WeightSpec::fixed(1, 1);
    double e100 = 0.0, e400 = 0.0;
    for (std::uint64_t k = 0; k < 8; ++k) {
        const auto pa = random_pairs(600 + k, 6, 1);
        const double ref = tn_reference(pa, w).t;
        e100 += std::abs(tn_quadrature(pa, w, 100, false) - ref);
        e400 += std::abs(tn_quadrature(pa, w, 400, false) - ref);
    }
    EXPECT_LT(e400, 0.6 * e100) << e100 << " " << e400;
}

TEST(Tsup, MatchesCellScan) {
    for (std::uint64_t k = 0; k < 30; ++k) {
        const auto pa = random_pairs(700 + k, 4 + k % 5, k % 2 ? 3 : 1, k % 3 == 0 ? 3 : 0);
        const auto v = tsup(pa);
        EXPECT_EQ(v.kind, StatKind::sup);
        EXPECT_NEAR(v.t, tsup_cell_scan(pa), 1e-12) << "sample " << k;
    }
}

TEST(Tsup, IdenticalMarginsPositive) {
    Rng rng(5);
    std::normal_distribution<double> g;
    std::vector<double> x(8);
    for (auto& v : x) v = g(rng);
    const auto d = distance_matrix(as_points(x), Metric::absolute);
    const auto pa = pair_arrays(d, d);
    auto zs = pa.z;
    std::sort(zs.begin(), zs.end());
    const double med = zs[zs.size() / 2];
    const double just_above = std::nextafter(med, 1e300);
    EXPECT_GT(en(pa, just_above, just_above), 0.0);
    // a dense scan over both radii never exceeds tsup and comes within 1e-12
    double dense = 0.0;
    const double top = zs.back() * 1.05;
    for (int a = 1; a <= 400; ++a)
        for (int b = 1; b <= 400; ++b) dense = std::max(dense, std::abs(en(pa, top * a / 400.0, top * b / 400.0)));
    EXPECT_LE(dense, tsup(pa).t + 1e-12);
    EXPECT_NEAR(tsup(pa).t, tsup_cell_scan(pa), 1e-12);
}

TEST(Statistic, EvaluateDispatch) {
    const auto pa = random_pairs(11, 7, 1);
    const auto w = WeightSpec::fixed(1, 1);
    EXPECT_EQ(evaluate(pa, w, StatKind::cvm).t, tn_fast(pa, w).t);
    EXPECT_EQ(evaluate(pa, w, StatKind::sup).t, tsup(pa).t);
}

TEST(Statistic, FastScalesToLargeN) {
    const auto pa = random_pairs(12, 200, 1);
    const auto w = WeightSpec::fixed(1, 1);
    EXPECT_LE(rel(tn_fast(pa, w).t, tn_reference(pa, w).t), 1e-9);
}
