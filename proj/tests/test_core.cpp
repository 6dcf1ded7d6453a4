#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rrind/core.hpp"
#include "rrind/csv.hpp"
#include "rrind/parallel.hpp"

using namespace rrind;

namespace {

std::vector<Point> random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g;
    std::vector<Point> pts(n, Point(dim));
    for (auto& p : pts)
        for (auto& v : p) v = g(rng);
    return pts;
}

std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST(DistanceMatrix, AbsoluteOnePair) {
    const auto d = distance_matrix({{0.0}, {3.0}}, Metric::absolute);
    EXPECT_EQ(d(0, 1), 3.0);
    EXPECT_EQ(d(1, 0), 3.0);
    EXPECT_EQ(d(0, 0), 0.0);
}

TEST(DistanceMatrix, EuclideanThreeFourFive) {
    const auto d = distance_matrix({{0.0, 0.0}, {3.0, 4.0}}, Metric::euclidean);
    EXPECT_EQ(d(0, 1), 5.0);
}

TEST(DistanceMatrix, MatchesScalarLoopInR3) {
    const auto pts = random_points(4, 3, 11);
    const auto d = distance_matrix(pts, Metric::euclidean);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double ss = 0.0;
            for (std::size_t k = 0; k < 3; ++k) ss += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
            EXPECT_LT(std::abs(d(i, j) - std::sqrt(ss)), 1e-12);
        }
}

TEST(DistanceMatrix, Errors) {
    EXPECT_THROW(distance_matrix({{0.0}, {1.0, 2.0}}, Metric::euclidean), std::invalid_argument);
    EXPECT_THROW(distance_matrix({{0.0}, {NAN}}, Metric::absolute), std::invalid_argument);
    EXPECT_THROW(distance_matrix({{0.0, 1.0}, {1.0, 2.0}}, Metric::absolute), std::invalid_argument);
    EXPECT_THROW(distance_matrix({{0.0}}, Metric::absolute), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix(2, {0, 1, 2, 0}), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix(2, {1, 1, 1, 0}), std::invalid_argument);
    EXPECT_THROW(DistanceMatrix(2, {0, -1, -1, 0}), std::invalid_argument);
    EXPECT_NO_THROW(DistanceMatrix(2, {0, 1, 1 + 1e-12, 0}, 1e-9));
}

TEST(PairArrays, TwoPoints) {
    const auto dx = distance_matrix({{0.0}, {2.5}}, Metric::absolute);
    const auto pa = pair_arrays(dx, dx);
    ASSERT_EQ(pa.count(), 2u);
    EXPECT_EQ(pa.z[0], 2.5);
    EXPECT_EQ(pa.z[1], 2.5);
}

TEST(PairArrays, HandEnumerationAndOrder) {
    const auto dx = distance_matrix({{0.0}, {1.0}, {3.0}}, Metric::absolute);
    const auto pa = pair_arrays(dx, dx);
    EXPECT_EQ(sorted(pa.z), (std::vector<double>{1, 1, 2, 2, 3, 3}));
    const std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}};
    ASSERT_EQ(pa.pair_index.size(), expected.size());
    for (std::size_t k = 0; k < expected.size(); ++k) {
        EXPECT_EQ(pa.pair_index[k].i, expected[k].first);
        EXPECT_EQ(pa.pair_index[k].j, expected[k].second);
        EXPECT_EQ(pa.z[k], dx(expected[k].first, expected[k].second));
    }
}

TEST(PairArrays, SharedIndexAndRelabelInvariance) {
    const auto xs = random_points(7, 2, 3), ys = random_points(7, 1, 4);
    const auto dx = distance_matrix(xs, Metric::euclidean), dy = distance_matrix(ys, Metric::absolute);
    const auto pa = pair_arrays(dx, dy);
    for (std::size_t k = 0; k < pa.count(); ++k) {
        EXPECT_EQ(pa.z[k], dx(pa.pair_index[k].i, pa.pair_index[k].j));
        EXPECT_EQ(pa.t[k], dy(pa.pair_index[k].i, pa.pair_index[k].j));
    }
    std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
    std::vector<Point> xr(7), yr(7);
    for (std::size_t i = 0; i < 7; ++i) {
        xr[i] = xs[perm[i]];
        yr[i] = ys[perm[i]];
    }
    const auto pr = pair_arrays(distance_matrix(xr, Metric::euclidean), distance_matrix(yr, Metric::absolute));
    EXPECT_EQ(sorted(pr.z), sorted(pa.z));
    EXPECT_EQ(sorted(pr.t), sorted(pa.t));
}

TEST(PairArrays, SizeMismatch) {
    const auto a = distance_matrix(random_points(3, 1, 1), Metric::absolute);
    const auto b = distance_matrix(random_points(4, 1, 1), Metric::absolute);
    EXPECT_THROW(pair_arrays(a, b), std::invalid_argument);
}

TEST(Repair, IdentityIsPairArrays) {
    const auto dx = distance_matrix(random_points(6, 1, 5), Metric::absolute);
    const auto dy = distance_matrix(random_points(6, 3, 6), Metric::euclidean);
    const std::vector<std::size_t> id{0, 1, 2, 3, 4, 5};
    const auto a = repair_under_permutation(dx, dy, id);
    const auto b = pair_arrays(dx, dy);
    EXPECT_EQ(a.z, b.z);
    EXPECT_EQ(a.t, b.t);
}

TEST(Repair, SortedMultisetUnchanged) {
    const auto dx = distance_matrix(random_points(9, 2, 7), Metric::euclidean);
    const auto dy = distance_matrix(random_points(9, 1, 8), Metric::absolute);
    Rng rng(9);
    std::vector<std::size_t> sigma;
    random_permutation(sigma, 9, rng);
    const auto a = repair_under_permutation(dx, dy, sigma);
    const auto b = pair_arrays(dx, dy);
    EXPECT_EQ(sorted(a.z), sorted(b.z));
    EXPECT_EQ(a.t, b.t);
}

TEST(Repair, HandExample) {
    // sigma = (2,3,1) one-based is {1,2,0} zero-based; pair (1,2) one-based is (0,1).
    const auto dx = distance_matrix({{0.0}, {1.0}, {3.0}}, Metric::absolute);
    const std::vector<std::size_t> sigma{1, 2, 0};
    const auto a = repair_under_permutation(dx, dx, sigma);
    EXPECT_EQ(a.pair_index[0].i, 0u);
    EXPECT_EQ(a.pair_index[0].j, 1u);
    EXPECT_EQ(a.z[0], 2.0);
}

TEST(Repair, InvalidPermutation) {
    const auto dx = distance_matrix({{0.0}, {1.0}, {3.0}}, Metric::absolute);
    EXPECT_THROW(repair_under_permutation(dx, dx, std::vector<std::size_t>{0, 0, 1}), std::invalid_argument);
    EXPECT_THROW(repair_under_permutation(dx, dx, std::vector<std::size_t>{0, 1}), std::invalid_argument);
    EXPECT_THROW(repair_under_permutation(dx, dx, std::vector<std::size_t>{0, 1, 3}), std::invalid_argument);
}

TEST(PairArrays, Deterministic) {
    const auto xs = random_points(8, 3, 21);
    const auto a = pair_arrays(distance_matrix(xs, Metric::euclidean), distance_matrix(xs, Metric::euclidean));
    const auto b = pair_arrays(distance_matrix(xs, Metric::euclidean), distance_matrix(xs, Metric::euclidean));
    EXPECT_EQ(a.z, b.z);
    for (double v : a.z) EXPECT_TRUE(std::isfinite(v) && v >= 0.0);
}

TEST(PairedSample, Validation) {
    PairedSample s;
    s.xs = {{0.0}, {1.0}};
    s.ys = {{0.0}};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.ys = {{0.0}, {1.0, 2.0}};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.ys = {{0.0}, {2.0}};
    EXPECT_NO_THROW(s.validate());
}

TEST(Csv, ReadPoints) {
    std::istringstream in("a,b\n1,2\n\n3.5, 4\n");
    const auto pts = read_points_csv(in, true);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[1], (Point{3.5, 4.0}));
}

TEST(Csv, MalformedCellReportsPosition) {
    std::istringstream in("1,2\n3,x\n");
    try {
        read_points_csv(in, false);
        FAIL() << "expected an error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
    }
    std::istringstream ragged("1,2\n3\n");
    EXPECT_THROW(read_points_csv(ragged, false), std::invalid_argument);
}

TEST(Csv, DistanceTable) {
    std::istringstream ok("0,1,2\n1,0,3\n2,3,0\n");
    const auto d = read_distance_csv(ok, false);
    EXPECT_EQ(d(2, 1), 3.0);
    std::istringstream asym("0,1\n1.1,0\n");
    EXPECT_THROW(read_distance_csv(asym, false), std::invalid_argument);
    std::istringstream nonsquare("0,1,2\n1,0,3\n");
    EXPECT_THROW(read_distance_csv(nonsquare, false), std::invalid_argument);
}

TEST(Csv, RoundTrip) {
    const auto pts = random_points(5, 3, 2);
    std::stringstream ss;
    write_points_csv(ss, pts);
    EXPECT_EQ(read_points_csv(ss, false), pts);
}
