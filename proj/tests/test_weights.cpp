#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rrind/core.hpp"
#include "rrind/parallel.hpp"
#include "rrind/weights.hpp"

using namespace rrind;

TEST(GaussianCdf, Values) {
    EXPECT_EQ(gaussian_cdf(0, 1, 0), 0.5);
    EXPECT_EQ(gaussian_cdf(1, 2, 1), 0.5);
    EXPECT_NEAR(gaussian_cdf(0, 1, 1.959964), 0.975, 1e-6);
    // erfc-based tail stays accurate far out
    EXPECT_NEAR(gaussian_cdf(0, 1, -8.0), 6.22096057427178e-16, 1e-28);
    EXPECT_THROW(gaussian_cdf(0, 0, 1), std::invalid_argument);
}

TEST(GaussianCdf, Nondecreasing) {
    double prev = 0.0;
    for (double x = -10; x <= 10; x += 0.01) {
        const double v = gaussian_cdf(0.3, 1.7, x);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(FitDataDriven, HandArithmetic) {
    const auto d = distance_matrix(as_points(std::vector<double>{0, 1, 3}), Metric::absolute);
    const auto w = fit_data_driven(pair_arrays(d, d));
    EXPECT_DOUBLE_EQ(w.mu1, 2.0);
    EXPECT_NEAR(w.sigma1 * w.sigma1, 2.0 / 3.0, 1e-15);
    EXPECT_EQ(w.origin, WeightOrigin::data_driven);
}

TEST(FitDataDriven, DegenerateSideNamed) {
    const auto x = distance_matrix(as_points(std::vector<double>{0, 1, 3}), Metric::absolute);
    const auto c = distance_matrix(as_points(std::vector<double>{5, 5, 5}), Metric::absolute);
    try {
        fit_data_driven(pair_arrays(x, c));
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("Y-side"), std::string::npos);
    }
    try {
        fit_data_driven(pair_arrays(c, x));
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("X-side"), std::string::npos);
    }
}

TEST(FitDataDriven, ScalesWithData) {
    Rng rng(1);
    std::normal_distribution<double> g;
    std::vector<Point> xs(12, Point(3)), scaled(12, Point(3));
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            xs[i][k] = g(rng);
            scaled[i][k] = 2.5 * xs[i][k];
        }
    const auto dx = distance_matrix(xs, Metric::euclidean);
    const auto ds = distance_matrix(scaled, Metric::euclidean);
    const auto a = fit_data_driven(pair_arrays(dx, dx));
    const auto b = fit_data_driven(pair_arrays(ds, dx));
    EXPECT_NEAR(b.mu1, 2.5 * a.mu1, 1e-12);
    EXPECT_NEAR(b.sigma1, 2.5 * a.sigma1, 1e-12);
    EXPECT_NEAR(b.mu2, a.mu2, 1e-15);
}

TEST(FitDataDriven, RelabelInvariant) {
    const std::vector<double> x{0.3, -1.2, 2.2, 0.9, 1.1}, y{1, 0, 4, 2, 2.5};
    const std::vector<double> xr{2.2, 0.9, 0.3, 1.1, -1.2}, yr{4, 2, 1, 2.5, 0};
    const auto a = fit_data_driven(pair_arrays(distance_matrix(as_points(x), Metric::absolute),
                                               distance_matrix(as_points(y), Metric::absolute)));
    const auto b = fit_data_driven(pair_arrays(distance_matrix(as_points(xr), Metric::absolute),
                                               distance_matrix(as_points(yr), Metric::absolute)));
    EXPECT_NEAR(a.mu1, b.mu1, 1e-15);
    EXPECT_NEAR(a.sigma2, b.sigma2, 1e-15);
}

TEST(WeightSpec, FixedStoresStandardDeviation) {
    const auto w = WeightSpec::fixed(1.0, 4.0);
    EXPECT_EQ(w.sigma1, 2.0);
    EXPECT_EQ(w.sigma2, 2.0);
    EXPECT_THROW(WeightSpec::fixed(1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(WeightSpec::fixed(1.0, -1.0), std::invalid_argument);
}

TEST(WeightChoice, Grammar) {
    EXPECT_TRUE(parse_weight_choice("auto").data_driven());
    EXPECT_EQ(*parse_weight_choice("N(1,1)").fixed, WeightSpec::fixed(1, 1));
    EXPECT_EQ(*parse_weight_choice("n_1_4").fixed, WeightSpec::fixed(1, 4));
    EXPECT_EQ(*parse_weight_choice("n_0_1").fixed, WeightSpec::fixed(0, 1));
    EXPECT_EQ(*parse_weight_choice("N(0,1)xN(2,4)").fixed, WeightSpec::fixed(0, 1, 2, 4));
    EXPECT_EQ(*parse_weight_choice(" N( 2 , 4 ) ").fixed, WeightSpec::fixed(2, 4));
    EXPECT_THROW(parse_weight_choice("N(1)"), std::invalid_argument);
    EXPECT_THROW(parse_weight_choice("N(a,1)"), std::invalid_argument);
    EXPECT_THROW(parse_weight_choice("N(1,0)"), std::invalid_argument);
    EXPECT_THROW(parse_weight_choice("gamma"), std::invalid_argument);
}

TEST(WeightChoice, Labels) {
    EXPECT_EQ(label(WeightSpec::fixed(1, 1)), "N(1,1)");
    EXPECT_EQ(label(WeightSpec::fixed(0, 1, 2, 4)), "N(0,1)xN(2,4)");
    EXPECT_EQ(parse_weight_choice("auto").label(), "auto");
}
