#pragma once

// Seeded samplers for the dependence alternatives and time-series models.
//
// Scalar alternatives produce 1-d points with the absolute metric, vector
// alternatives use the euclidean metric, and time series are points in
// R^length (default 100) with the euclidean metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "rrind/core.hpp"
#include "rrind/parallel.hpp"

namespace rrind {

enum class Alternative {
    parabola,
    two_parabolas,
    circle,
    diamond,
    w_shape,
    four_clouds,
    logarithmic,
    epsilon,
    quadratic,
    two_d_pairwise,
    independent_normal,
    ar1,
    arma21,
    bm,
    fbm,
    fou,
    fou2,
};

struct AlternativeInfo {
    Alternative id;
    const char* name;
    bool series;
    std::map<std::string, double> defaults;  ///< the full parameter schema
};

/// Response families for series models: how Y is built from the X path.
///   sq_plus_3eps           Y = X^2 + 3 eps
///   sqrt_abs_plus_z        Y = sqrt|X| + Z, Z ~ N(0, sd^2), sd = sd of sqrt|X| along the path
///   sqrt_abs_plus_eps      Y = sqrt|X| + eps
///   eps_times_x            Y = eps * X
///   eps_times_x_plus_3eps  Y = eps * X + 3 eps'
///   eps                    Y = eps (independent)
///   independent_bm         Y = an independent Brownian motion
/// eps, eps' are independent unit-variance white noises per time point.
inline const std::vector<std::string>& series_responses() {
    static const std::vector<std::string> r{"sq_plus_3eps",  "sqrt_abs_plus_z",       "sqrt_abs_plus_eps",
                                            "eps_times_x",   "eps_times_x_plus_3eps", "eps",
                                            "independent_bm"};
    return r;
}

inline const std::vector<AlternativeInfo>& alternative_catalog() {
    static const std::vector<AlternativeInfo> cat{
        {Alternative::parabola, "parabola", false, {}},
        {Alternative::two_parabolas, "two_parabolas", false, {}},
        {Alternative::circle, "circle", false, {}},
        {Alternative::diamond, "diamond", false, {{"theta", std::numbers::pi / 4}}},
        {Alternative::w_shape, "w_shape", false, {}},
        {Alternative::four_clouds, "four_clouds", false, {}},
        {Alternative::logarithmic, "logarithmic", false, {{"dim", 5}}},
        {Alternative::epsilon, "epsilon", false, {{"dim", 5}}},
        {Alternative::quadratic, "quadratic", false, {{"dim", 5}, {"noise_var", 3}}},
        {Alternative::two_d_pairwise, "two_d_pairwise", false, {}},
        {Alternative::independent_normal, "independent_normal", false, {{"dim_x", 1}, {"dim_y", 1}}},
        {Alternative::ar1, "ar1", true, {{"phi", 0.9}, {"length", 100}}},
        {Alternative::arma21, "arma21", true, {{"phi1", 0.2}, {"phi2", 0.5}, {"theta", 0.2}, {"length", 100}}},
        {Alternative::bm, "bm", true, {{"sigma", 1}, {"length", 100}}},
        {Alternative::fbm, "fbm", true, {{"hurst", 0.7}, {"sigma", 1}, {"length", 100}}},
        {Alternative::fou, "fou", true, {{"hurst", 0.7}, {"sigma", 1}, {"lambda", 0.3}, {"length", 100}}},
        {Alternative::fou2,
         "fou2",
         true,
         {{"hurst", 0.7}, {"sigma", 1}, {"lambda1", 0.3}, {"lambda2", 0.8}, {"length", 100}}},
    };
    return cat;
}

inline const AlternativeInfo& alternative_info(Alternative a) {
    for (const auto& info : alternative_catalog())
        if (info.id == a) return info;
    throw std::invalid_argument("unknown alternative");
}

inline Alternative parse_alternative(const std::string& name) {
    for (const auto& info : alternative_catalog())
        if (name == info.name) return info.id;
    throw std::invalid_argument("unknown alternative '" + name + "'");
}

inline const char* to_string(Alternative a) { return alternative_info(a).name; }

struct AlternativeSpec {
    Alternative name = Alternative::parabola;
    std::map<std::string, double> params;  ///< overrides of the schema defaults
    std::string response;                  ///< series models only (ar1, arma21, bm, fbm)
    std::size_t n = 30;
    std::uint64_t seed = 0;

    /// Effective value of a parameter (override or default).
    double param(const std::string& key) const {
        if (auto it = params.find(key); it != params.end()) return it->second;
        const auto& d = alternative_info(name).defaults;
        if (auto it = d.find(key); it != d.end()) return it->second;
        throw std::invalid_argument("alternative '" + std::string(to_string(name)) + "' has no parameter '" + key + "'");
    }

    bool uses_response() const {
        return name == Alternative::ar1 || name == Alternative::arma21 || name == Alternative::bm ||
               name == Alternative::fbm;
    }

    void validate() const {
        const auto& info = alternative_info(name);
        for (const auto& [k, v] : params) {
            if (!info.defaults.count(k))
                throw std::invalid_argument("unknown parameter '" + k + "' for alternative '" + info.name + "'");
            if (!std::isfinite(v)) throw std::invalid_argument("parameter '" + k + "' must be finite");
        }
        if (n < 2) throw std::invalid_argument("alternative needs n >= 2");
        if (uses_response()) {
            const auto& r = series_responses();
            if (std::find(r.begin(), r.end(), response) == r.end())
                throw std::invalid_argument("series alternative '" + std::string(info.name) +
                                            "' needs a valid response, got '" + response + "'");
        } else if (!response.empty()) {
            throw std::invalid_argument("alternative '" + std::string(info.name) + "' takes no response");
        }
        auto positive_int = [&](const char* key) {
            const double v = param(key);
            if (v < 1 || v != std::floor(v)) throw std::invalid_argument(std::string(key) + " must be a positive integer");
        };
        if (info.defaults.count("dim")) positive_int("dim");
        if (info.defaults.count("dim_x")) positive_int("dim_x");
        if (info.defaults.count("dim_y")) positive_int("dim_y");
        if (info.defaults.count("length")) {
            positive_int("length");
            if (param("length") < 2) throw std::invalid_argument("length must be >= 2");
        }
        if (info.defaults.count("hurst")) {
            const double h = param("hurst");
            if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("hurst must lie in (0, 1)");
        }
        for (const char* key : {"lambda", "lambda1", "lambda2", "sigma", "noise_var"})
            if (info.defaults.count(key) && !(param(key) > 0.0))
                throw std::invalid_argument(std::string(key) + " must be positive");
        if (name == Alternative::fou2 && param("lambda1") == param("lambda2"))
            throw std::invalid_argument("fou2 needs lambda1 != lambda2");
        if (name == Alternative::ar1 && !(std::abs(param("phi")) < 1.0))
            throw std::invalid_argument("ar1 needs |phi| < 1");
    }

    bool operator==(const AlternativeSpec&) const = default;
};

namespace detail {

// Lower Cholesky factor of the fractional Gaussian noise covariance
// (increments of fBm with unit sigma at spacing dt):
//   gamma(k) = dt^{2H}/2 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
// Cumulative sums of L g then have exactly the fBm covariance
// (s^{2H} + t^{2H} - |t-s|^{2H}) / 2 on the grid.
class FgnFactorCache {
public:
    std::shared_ptr<const Eigen::MatrixXd> get(double hurst, std::size_t steps, double dt) {
        const auto key = std::make_tuple(hurst, steps, dt);
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        Eigen::MatrixXd cov(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(steps));
        const double h2 = 2.0 * hurst;
        const double scale = 0.5 * std::pow(dt, h2);
        for (std::size_t i = 0; i < steps; ++i)
            for (std::size_t j = 0; j < steps; ++j) {
                const double k = std::abs(static_cast<double>(i) - static_cast<double>(j));
                cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    scale * (std::pow(k + 1, h2) - 2 * std::pow(k, h2) + std::pow(std::abs(k - 1), h2));
            }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw std::runtime_error("fGn covariance is not positive definite");
        auto factor = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
        cache_.emplace(key, factor);
        return factor;
    }

    static FgnFactorCache& instance() {
        static FgnFactorCache c;
        return c;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<double, std::size_t, double>, std::shared_ptr<const Eigen::MatrixXd>> cache_;
};

inline std::vector<double> standard_normals(std::size_t count, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> out(count);
    for (auto& v : out) v = g(rng);
    return out;
}

}  // namespace detail

/// fBm path at times 0, dt, ..., steps*dt (steps + 1 points, starting at 0).
inline std::vector<double> fbm_path(double hurst, double sigma, std::size_t steps, double dt, Rng& rng) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("hurst must lie in (0, 1)");
    std::vector<double> path(steps + 1, 0.0);
    const auto g = detail::standard_normals(steps, rng);
    if (hurst == 0.5) {
        const double sd = sigma * std::sqrt(dt);
        for (std::size_t k = 0; k < steps; ++k) path[k + 1] = path[k] + sd * g[k];
        return path;
    }
    const auto L = detail::FgnFactorCache::instance().get(hurst, steps, dt);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(steps));
    const Eigen::VectorXd inc = L->triangularView<Eigen::Lower>() * gv;
    for (std::size_t k = 0; k < steps; ++k) path[k + 1] = path[k] + sigma * inc(static_cast<Eigen::Index>(k));
    return path;
}

/// Ornstein-Uhlenbeck transform of a driver path sampled at spacing dt:
/// Y_0 = 0, Y_{k+1} = e^{-lambda dt} (Y_k + sigma (X_{k+1} - X_k)), the
/// left-point Riemann-Stieltjes sum of sigma int e^{-lambda(t-s)} dX_s.
inline std::vector<double> ou_from_driver(const std::vector<double>& driver, double lambda, double sigma, double dt) {
    std::vector<double> y(driver.size(), 0.0);
    const double decay = std::exp(-lambda * dt);
    for (std::size_t k = 0; k + 1 < driver.size(); ++k) y[k + 1] = decay * (y[k] + sigma * (driver[k + 1] - driver[k]));
    return y;
}

/// Burn-in steps covering [-5 / lambda_min, 0) at spacing 1 / length.
inline std::size_t fou_burn_in_steps(double lambda_min, std::size_t length) {
    return static_cast<std::size_t>(std::ceil(5.0 / lambda_min * static_cast<double>(length)));
}

namespace detail {

inline PairedSample make_sample(std::size_t n, std::size_t dx, std::size_t dy) {
    PairedSample s;
    s.xs.assign(n, Point(dx));
    s.ys.assign(n, Point(dy));
    s.metric_x = dx == 1 ? Metric::absolute : Metric::euclidean;
    s.metric_y = dy == 1 ? Metric::absolute : Metric::euclidean;
    return s;
}

inline std::vector<double> ar1_path(double phi, std::size_t length, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(length);
    x[0] = g(rng) / std::sqrt(1.0 - phi * phi);  // stationary start
    for (std::size_t t = 1; t < length; ++t) x[t] = phi * x[t - 1] + g(rng);
    return x;
}

inline std::vector<double> arma21_path(double phi1, double phi2, double theta, std::size_t length, Rng& rng) {
    constexpr std::size_t burn = 500;
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(length + burn, 0.0);
    double e_prev = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double e = g(rng);
        const double x1 = t >= 1 ? x[t - 1] : 0.0;
        const double x2 = t >= 2 ? x[t - 2] : 0.0;
        x[t] = phi1 * x1 + phi2 * x2 + e + theta * e_prev;
        e_prev = e;
    }
    return {x.begin() + static_cast<std::ptrdiff_t>(burn), x.end()};
}

inline double population_sd(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

inline std::vector<double> response_path(const std::string& response, const std::vector<double>& x, Rng& rng) {
    const std::size_t L = x.size();
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> y(L);
    if (response == "sq_plus_3eps") {
        for (std::size_t t = 0; t < L; ++t) y[t] = x[t] * x[t] + 3.0 * g(rng);
    } else if (response == "sqrt_abs_plus_z") {
        std::vector<double> root(L);
        for (std::size_t t = 0; t < L; ++t) root[t] = std::sqrt(std::abs(x[t]));
        const double sd = population_sd(root);
        for (std::size_t t = 0; t < L; ++t) y[t] = root[t] + sd * g(rng);
    } else if (response == "sqrt_abs_plus_eps") {
        for (std::size_t t = 0; t < L; ++t) y[t] = std::sqrt(std::abs(x[t])) + g(rng);
    } else if (response == "eps_times_x") {
        for (std::size_t t = 0; t < L; ++t) y[t] = g(rng) * x[t];
    } else if (response == "eps_times_x_plus_3eps") {
        for (std::size_t t = 0; t < L; ++t) {
            const double e = g(rng);
            y[t] = e * x[t] + 3.0 * g(rng);
        }
    } else if (response == "eps") {
        for (std::size_t t = 0; t < L; ++t) y[t] = g(rng);
    } else if (response == "independent_bm") {
        const auto b = fbm_path(0.5, 1.0, L - 1, 1.0 / static_cast<double>(L), rng);
        y.assign(b.begin(), b.end());
    } else {
        throw std::invalid_argument("unknown response '" + response + "'");
    }
    return y;
}

}  // namespace detail

/// One FOU / FOU(2) trajectory pair driven by the same fBm path. Returns the
/// observed driver and the component OU paths for each rate, so callers can
/// form the FOU(2) combination (or check it).
struct FouTrajectory {
    std::vector<double> driver;                 ///< X on the observation grid
    std::vector<std::vector<double>> ou_paths;  ///< one per lambda, observation grid
};

inline FouTrajectory fou_trajectory(double hurst, double sigma, const std::vector<double>& lambdas, std::size_t length,
                                    Rng& rng) {
    const double lambda_min = *std::min_element(lambdas.begin(), lambdas.end());
    const std::size_t burn = fou_burn_in_steps(lambda_min, length);
    const double dt = 1.0 / static_cast<double>(length);
    const auto full = fbm_path(hurst, 1.0, burn + length - 1, dt, rng);
    FouTrajectory out;
    out.driver.resize(length);
    for (std::size_t k = 0; k < length; ++k) out.driver[k] = full[burn + k] - full[burn];
    for (double lambda : lambdas) {
        const auto y = ou_from_driver(full, lambda, sigma, dt);
        out.ou_paths.emplace_back(y.begin() + static_cast<std::ptrdiff_t>(burn), y.end());
    }
    return out;
}

/// FOU(2) combination lambda1/(lambda1-lambda2) FOU(lambda1) + lambda2/(lambda2-lambda1) FOU(lambda2).
inline std::vector<double> fou2_combine(const std::vector<double>& fou1, const std::vector<double>& fou2, double lambda1,
                                        double lambda2) {
    std::vector<double> y(fou1.size());
    const double c1 = lambda1 / (lambda1 - lambda2);
    const double c2 = lambda2 / (lambda2 - lambda1);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = c1 * fou1[k] + c2 * fou2[k];
    return y;
}

/// Trajectory pairs for the series models.
inline PairedSample generate_series(const AlternativeSpec& spec) {
    spec.validate();
    if (!alternative_info(spec.name).series) throw std::invalid_argument("generate_series needs a series model");
    const auto L = static_cast<std::size_t>(spec.param("length"));
    const double dt = 1.0 / static_cast<double>(L);
    Rng rng(spec.seed);
    PairedSample s;
    s.metric_x = Metric::euclidean;
    s.metric_y = Metric::euclidean;
    s.xs.reserve(spec.n);
    s.ys.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        std::vector<double> x;
        switch (spec.name) {
        case Alternative::ar1: x = detail::ar1_path(spec.param("phi"), L, rng); break;
        case Alternative::arma21:
            x = detail::arma21_path(spec.param("phi1"), spec.param("phi2"), spec.param("theta"), L, rng);
            break;
        case Alternative::bm: x = fbm_path(0.5, spec.param("sigma"), L - 1, dt, rng); break;
        case Alternative::fbm: x = fbm_path(spec.param("hurst"), spec.param("sigma"), L - 1, dt, rng); break;
        case Alternative::fou: {
            auto tr = fou_trajectory(spec.param("hurst"), spec.param("sigma"), {spec.param("lambda")}, L, rng);
            s.xs.push_back(std::move(tr.driver));
            s.ys.push_back(std::move(tr.ou_paths[0]));
            continue;
        }
        case Alternative::fou2: {
            const double l1 = spec.param("lambda1"), l2 = spec.param("lambda2");
            auto tr = fou_trajectory(spec.param("hurst"), spec.param("sigma"), {l1, l2}, L, rng);
            s.ys.push_back(fou2_combine(tr.ou_paths[0], tr.ou_paths[1], l1, l2));
            s.xs.push_back(std::move(tr.driver));
            continue;
        }
        default: throw std::invalid_argument("not a series model");
        }
        auto y = detail::response_path(spec.response, x, rng);
        s.xs.push_back(std::move(x));
        s.ys.push_back(std::move(y));
    }
    return s;
}

struct CircleDraw {
    double u, x, y;
};

/// One circle draw with its latent angle variable U ~ U(-1, 1).
inline CircleDraw circle_draw(Rng& rng) {
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    const double u = sym(rng);
    const double ex = g(rng), ey = g(rng);
    return {u, std::sin(std::numbers::pi * u) + ex / 8.0, std::cos(std::numbers::pi * u) + ey / 8.0};
}

/// n i.i.d. draws from the named alternative.
inline PairedSample generate(const AlternativeSpec& spec) {
    spec.validate();
    if (alternative_info(spec.name).series) return generate_series(spec);
    const std::size_t n = spec.n;
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    switch (spec.name) {
    case Alternative::parabola: {
        auto s = detail::make_sample(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = sym(rng);
            s.xs[i][0] = x;
            s.ys[i][0] = (x * x + unit(rng)) / 2.0;
        }
        return s;
    }
    case Alternative::two_parabolas: {
        auto s = detail::make_sample(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = sym(rng);
            const double y = x * x + unit(rng) / 2.0;
            s.xs[i][0] = x;
            s.ys[i][0] = coin(rng) ? y : -y;
        }
        return s;
    }
    case Alternative::circle: {
        auto s = detail::make_sample(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto d = circle_draw(rng);
            s.xs[i][0] = d.x;
            s.ys[i][0] = d.y;
        }
        return s;
    }
    case Alternative::diamond: {
        auto s = detail::make_sample(n, 1, 1);
        const double th = spec.param("theta");
        for (std::size_t i = 0; i < n; ++i) {
            const double u1 = sym(rng), u2 = sym(rng);
            s.xs[i][0] = std::sin(th) * u1 + std::cos(th) * u2;
            s.ys[i][0] = -std::sin(th) * u1 + std::cos(th) * u2;
        }
        return s;
    }
    case Alternative::w_shape: {
        // The U2 / n term uses the sample size being drawn.
        auto s = detail::make_sample(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = sym(rng), u1 = unit(rng), u2 = unit(rng);
            s.xs[i][0] = u + u1 / 3.0;
            s.ys[i][0] = 4.0 * std::pow(u * u - 0.5, 2) + u2 / static_cast<double>(n);
        }
        return s;
    }
    case Alternative::four_clouds: {
        auto s = detail::make_sample(n, 1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const bool cx = coin(rng);
            const double zx = g(rng);
            const bool cy = coin(rng);
            const double zy = g(rng);
            s.xs[i][0] = (cx ? 1.0 : -1.0) + zx / 3.0;
            s.ys[i][0] = (cy ? 1.0 : -1.0) + zy / 3.0;
        }
        return s;
    }
    case Alternative::logarithmic:
    case Alternative::epsilon: {
        const auto d = static_cast<std::size_t>(spec.param("dim"));
        auto s = detail::make_sample(n, d, d);
        s.metric_x = s.metric_y = Metric::euclidean;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                const double x = g(rng);
                s.xs[i][k] = x;
                s.ys[i][k] = spec.name == Alternative::logarithmic ? std::log(x * x) : g(rng) * x;
            }
        return s;
    }
    case Alternative::quadratic: {
        const auto d = static_cast<std::size_t>(spec.param("dim"));
        const double noise_sd = std::sqrt(spec.param("noise_var"));
        auto s = detail::make_sample(n, d, d);
        s.metric_x = s.metric_y = Metric::euclidean;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                const double x = g(rng);
                const double e = noise_sd * g(rng);
                s.xs[i][k] = x;
                s.ys[i][k] = k < 2 ? x + 4.0 * x * x + e : e;
            }
        return s;
    }
    case Alternative::two_d_pairwise: {
        auto s = detail::make_sample(n, 1, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g(rng), z0 = g(rng), y1 = g(rng);
            const double sign = (x * y1 > 0) - (x * y1 < 0);
            s.xs[i][0] = x;
            s.ys[i][0] = y1;
            s.ys[i][1] = std::abs(z0) * sign;
        }
        return s;
    }
    case Alternative::independent_normal: {
        auto s = detail::make_sample(n, static_cast<std::size_t>(spec.param("dim_x")),
                                     static_cast<std::size_t>(spec.param("dim_y")));
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : s.xs[i]) v = g(rng);
            for (auto& v : s.ys[i]) v = g(rng);
        }
        return s;
    }
    default: break;
    }
    throw std::invalid_argument("unhandled alternative");
}

/// Independent null sampler with the same dimensions as an alternative.
inline std::pair<std::size_t, std::size_t> alternative_dims(const AlternativeSpec& spec) {
    AlternativeSpec probe = spec;
    probe.n = 2;
    const auto s = generate(probe);
    return {s.dim_x(), s.dim_y()};
}

}  // namespace rrind
