#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "rrind/core.hpp"
#include "rrind/parallel.hpp"
#include "rrind/recurrence.hpp"

using namespace rrind;

namespace {

PairArrays scalar_pairs(const std::vector<double>& x, const std::vector<double>& y) {
    return pair_arrays(distance_matrix(as_points(x), Metric::absolute), distance_matrix(as_points(y), Metric::absolute));
}

std::vector<double> normals(std::size_t n, Rng& rng) {
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

// Direct quadruple loop over distinct (i, j, k, h) for E'_n.
double en_prime_oracle(const std::vector<double>& x, const std::vector<double>& y, double r, double s) {
    const std::size_t n = x.size();
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t h = 0; h < n; ++h) {
                    if (i == j || i == k || i == h || j == k || j == h || k == h) continue;
                    const bool xr = std::abs(x[i] - x[j]) < r;
                    sum += (xr && std::abs(y[i] - y[j]) < s) - (xr && std::abs(y[h] - y[k]) < s);
                    count += 1.0;
                }
    return std::sqrt(static_cast<double>(n)) * sum / count;
}

}  // namespace

TEST(Rates, TwoPoints) {
    const auto pa = scalar_pairs({0.0, 1.0}, {0.0, 1.0});
    EXPECT_EQ(rr_x(pa, 2.0), 1.0);
    EXPECT_EQ(rr_x(pa, 1.0), 0.0);
}

TEST(Rates, HandEnumeration) {
    const auto pa = scalar_pairs({0, 1, 3}, {0, 10, 11});
    EXPECT_DOUBLE_EQ(rr_x(pa, 2.5), 4.0 / 6.0);
    EXPECT_DOUBLE_EQ(rr_joint(pa, 2.5, 5.0), 2.0 / 6.0);
    EXPECT_NEAR(en(pa, 2.5, 5.0), std::sqrt(3.0) / 9.0, 1e-15);
}

TEST(Rates, JointMarginalizesAndIsBounded) {
    Rng rng(3);
    const auto pa = scalar_pairs(normals(15, rng), normals(15, rng));
    const double huge = std::numeric_limits<double>::max();
    for (double r : {0.1, 0.5, 1.0, 2.0}) {
        EXPECT_EQ(rr_joint(pa, r, huge), rr_x(pa, r));
        for (double s : {0.2, 0.7, 1.5}) {
            const double j = rr_joint(pa, r, s);
            EXPECT_LE(j, std::min(rr_x(pa, r), rr_y(pa, s)));
            EXPECT_GE(j, rr_x(pa, r) + rr_y(pa, s) - 1.0 - 1e-15);
        }
    }
}

TEST(Rates, MonotoneInRadius) {
    Rng rng(4);
    const auto pa = scalar_pairs(normals(12, rng), normals(12, rng));
    double prev_x = 0.0, prev_j = 0.0;
    for (double r = 0.01; r < 5.0; r += 0.01) {
        EXPECT_GE(rr_x(pa, r), prev_x);
        EXPECT_GE(rr_joint(pa, r, 1.0), prev_j);
        prev_x = rr_x(pa, r);
        prev_j = rr_joint(pa, r, 1.0);
    }
}

TEST(En, ConstantXIsZero) {
    Rng rng(5);
    const auto pa = scalar_pairs(std::vector<double>(10, 2.0), normals(10, rng));
    for (double r : {0.1, 1.0, 10.0})
        for (double s : {0.1, 1.0, 10.0}) EXPECT_EQ(en(pa, r, s), 0.0);
}

TEST(En, GridMatchesPointwise) {
    Rng rng(6);
    auto x = normals(20, rng);
    for (auto& v : x) v = std::round(v * 2.0) / 2.0;  // ties and grid nodes on distances
    const auto pa = scalar_pairs(x, normals(20, rng));
    const std::vector<double> rg{0.25, 0.5, 1.0, 1.5, 2.0, 3.0};
    const std::vector<double> sg{0.1, 0.3, 0.9, 1.7, 4.0};
    const auto grid = en_grid(pa, rg, sg);
    for (std::size_t a = 0; a < rg.size(); ++a)
        for (std::size_t b = 0; b < sg.size(); ++b) {
            EXPECT_NEAR(grid(a, b), en(pa, rg[a], sg[b]), 1e-12);
            EXPECT_LE(std::abs(grid(a, b)), std::sqrt(20.0));
        }
}

TEST(En, GridRejectsBadGrids) {
    const auto pa = scalar_pairs({0, 1, 3}, {0, 1, 2});
    const std::vector<double> ok{1.0, 2.0}, unsorted{2.0, 1.0}, nonpos{0.0, 1.0};
    EXPECT_THROW(en_grid(pa, unsorted, ok), std::invalid_argument);
    EXPECT_THROW(en_grid(pa, ok, nonpos), std::invalid_argument);
}

TEST(En, SmallUnderIndependence) {
    Rng rng(7);
    double mean_abs = 0.0;
    const int reps = 200;
    for (int k = 0; k < reps; ++k) {
        const auto pa = scalar_pairs(normals(60, rng), normals(60, rng));
        mean_abs += std::abs(en(pa, 1.0, 1.0));
    }
    mean_abs /= reps;
    // E_n(1,1) is asymptotically N(0, sigma^2) with sigma about 0.06.
    EXPECT_LT(mean_abs, 0.15);
}

TEST(EnPrime, MatchesQuadrupleLoop) {
    Rng rng(8);
    for (std::size_t n : {4u, 5u, 6u, 7u}) {
        const auto x = normals(n, rng), y = normals(n, rng);
        const auto dx = distance_matrix(as_points(x), Metric::absolute);
        const auto dy = distance_matrix(as_points(y), Metric::absolute);
        EXPECT_NEAR(en_prime(dx, dy, 1.0, 0.8), en_prime_oracle(x, y, 1.0, 0.8), 1e-12);
    }
}

TEST(EnPrime, ConstantX) {
    Rng rng(9);
    const std::vector<double> x(5, 1.0);
    const auto y = normals(5, rng);
    const auto dx = distance_matrix(as_points(x), Metric::absolute);
    const auto dy = distance_matrix(as_points(y), Metric::absolute);
    // first indicator reduces to 1{d(Y_i,Y_j)<s}: both averages are the Y recurrence rate
    EXPECT_NEAR(en_prime(dx, dy, 0.5, 1.0), en_prime_oracle(x, y, 0.5, 1.0), 1e-12);
    EXPECT_NEAR(en_prime(dx, dy, 0.5, 1.0), 0.0, 1e-12);
    EXPECT_EQ(en(pair_arrays(dx, dy), 0.5, 1.0), 0.0);
}

TEST(EnPrime, FarApartIsZero) {
    const auto dx = distance_matrix(as_points(std::vector<double>{0, 10, 20, 30}), Metric::absolute);
    const auto dy = distance_matrix(as_points(std::vector<double>{0, 1, 2, 3}), Metric::absolute);
    EXPECT_EQ(en_prime(dx, dy, 5.0, 2.0), 0.0);
}

TEST(EnPrime, Gates) {
    const auto d3 = distance_matrix(as_points(std::vector<double>{0, 1, 2}), Metric::absolute);
    EXPECT_THROW(en_prime(d3, d3, 1, 1), std::invalid_argument);
    std::vector<double> big(13);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i);
    const auto d13 = distance_matrix(as_points(big), Metric::absolute);
    EXPECT_THROW(en_prime(d13, d13, 1, 1), std::invalid_argument);
}

TEST(HnCheck, DegenerateWithinBound) {
    const auto c = distance_matrix(as_points(std::vector<double>{1, 1, 1, 1, 1}), Metric::absolute);
    const auto h = hn_check(c, c, 1.0, 1.0);
    EXPECT_TRUE(h.abs_ok);
    EXPECT_NEAR(h.hn, 0.0, 1e-12);
}

TEST(HnCheck, DecompositionOnCraftedSample) {
    // H_n = sqrt(n) (RRx RRy - mean over distinct (i,j),(h,k) of 1{dX_ij<r} 1{dY_hk<s})
    const std::vector<double> x{0.0, 0.4, 1.3, 2.0}, y{0.0, 0.9, 1.1, 3.0};
    const double r = 1.0, s = 1.0;
    const auto dx = distance_matrix(as_points(x), Metric::absolute);
    const auto dy = distance_matrix(as_points(y), Metric::absolute);
    const auto pa = pair_arrays(dx, dy);
    double distinct = 0.0, count = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t h = 0; h < 4; ++h)
                for (std::size_t k = 0; k < 4; ++k) {
                    if (i == j || i == h || i == k || j == h || j == k || h == k) continue;
                    distinct += (dx(i, j) < r) * (dy(h, k) < s);
                    count += 1.0;
                }
    const double expected = 2.0 * (rr_x(pa, r) * rr_y(pa, s) - distinct / count);
    EXPECT_NEAR(hn_check(dx, dy, r, s).hn, expected, 1e-12);
}

TEST(HnCheck, AbsoluteBoundHoldsOnRandomSamples) {
    Rng rng(10);
    std::uniform_real_distribution<double> rad(0.05, 3.0);
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = 4 + static_cast<std::size_t>(k % 5);
        const auto dx = distance_matrix(as_points(normals(n, rng)), Metric::absolute);
        const auto dy = distance_matrix(as_points(normals(n, rng)), Metric::absolute);
        const auto h = hn_check(dx, dy, rad(rng), rad(rng));
        EXPECT_TRUE(h.abs_ok) << h.hn << " vs " << h.bound;
        EXPECT_EQ(h.ok, h.hn >= -1e-12 && h.hn <= h.bound + 1e-12);
    }
}
