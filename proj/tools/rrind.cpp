// rrind: recurrence-rate independence test from the command line.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rrind/asymptotics.hpp"
#include "rrind/csv.hpp"
#include "rrind/generators.hpp"
#include "rrind/permutation.hpp"
#include "rrind/power.hpp"
#include "rrind/transform.hpp"
#include "rrind/validate.hpp"

namespace {

using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_failed_checks = 2;
constexpr int exit_rejected = 3;

void write_json(const json& j, const std::string& target) {
    const std::string text = j.dump(2) + "\n";
    if (target == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(target, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + target);
    out << text;
}

std::string read_all(const std::string& path) {
    if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), {}};
}

json weight_json(const rrind::WeightSpec& w, rrind::StatKind kind) {
    if (kind == rrind::StatKind::sup) return nullptr;
    return {{"label", rrind::label(w)},
            {"origin", w.origin == rrind::WeightOrigin::fixed ? "fixed" : "data_driven"},
            {"x", {{"mu", w.mu1}, {"sigma2", w.sigma1 * w.sigma1}}},
            {"y", {{"mu", w.mu2}, {"sigma2", w.sigma2 * w.sigma2}}}};
}

struct TestArgs {
    std::string x_path, y_path;
    bool header = false;
    bool distances = false;
    bool normal_scores = false;
    std::string weights = "auto";
    std::string stat = "cvm";
    std::size_t perms = 999;
    std::uint64_t seed = 1;
    std::string estimator = "paper";
    double level = 0.05;
    std::string json_out;
    int threads = 0;
    bool timing = false;
};

int run_test(const TestArgs& a) {
    const auto kind = a.stat == "sup" ? rrind::StatKind::sup : rrind::StatKind::cvm;
    const auto estimator = a.estimator == "plus_one" ? rrind::PValueEstimator::plus_one : rrind::PValueEstimator::paper;
    const auto choice = rrind::parse_weight_choice(a.weights);

    rrind::DistanceMatrix dx, dy;
    if (a.distances) {
        if (a.normal_scores) throw std::invalid_argument("--normal-scores needs raw observations, not distance tables");
        dx = rrind::read_distance_csv(a.x_path, a.header);
        dy = rrind::read_distance_csv(a.y_path, a.header);
    } else {
        rrind::PairedSample s;
        s.xs = rrind::read_points_csv(a.x_path, a.header);
        s.ys = rrind::read_points_csv(a.y_path, a.header);
        if (s.xs.size() != s.ys.size())
            throw std::invalid_argument("x has " + std::to_string(s.xs.size()) + " rows but y has " +
                                        std::to_string(s.ys.size()));
        s.metric_x = s.dim_x() == 1 ? rrind::Metric::absolute : rrind::Metric::euclidean;
        s.metric_y = s.dim_y() == 1 ? rrind::Metric::absolute : rrind::Metric::euclidean;
        if (a.normal_scores) s = rrind::normal_scores(s);
        std::tie(dx, dy) = rrind::distance_matrices(s);
    }
    const auto r = rrind::permutation_pvalue(dx, dy, choice, kind, a.perms, a.seed, estimator,
                                             rrind::resolve_threads(a.threads));

    json j{{"statistic", r.statistic.t},
           {"stat", rrind::to_string(kind)},
           {"p_value", r.p_value},
           {"m", r.m},
           {"seed", r.seed},
           {"estimator", rrind::to_string(r.estimator)},
           {"weight", weight_json(r.weight, kind)},
           {"exceedances", r.exceedances},
           {"n", r.n},
           {"normal_scores", a.normal_scores}};
    if (r.statistic.abc) j["terms"] = {{"a", r.statistic.abc->a}, {"b", r.statistic.abc->b}, {"c", r.statistic.abc->c}};
    if (a.timing) j["elapsed"] = r.elapsed.count();

    if (a.json_out == "-") {
        write_json(j, "-");
    } else {
        std::cout << "n          " << r.n << "\n"
                  << "statistic  " << std::setprecision(10) << r.statistic.t << " (" << rrind::to_string(kind) << ")\n";
        if (kind == rrind::StatKind::cvm) std::cout << "weights    " << rrind::label(r.weight) << "\n";
        std::cout << "p-value    " << r.p_value << " (" << rrind::to_string(r.estimator) << ", m=" << r.m
                  << ", seed=" << r.seed << ")\n";
        if (a.timing) std::cout << "elapsed    " << r.elapsed.count() << " s\n";
        if (!a.json_out.empty()) write_json(j, a.json_out);
    }
    return r.p_value < a.level ? exit_rejected : exit_ok;
}

struct PowerArgs {
    std::string config;
    std::string json_out;
    int threads = 0;
    bool timing = false;
};

int run_power(const PowerArgs& a) {
    const auto cfg = rrind::parse_power_config(read_all(a.config));
    for (const auto& w : rrind::config_warnings(cfg)) std::cerr << "warning: " << w << "\n";
    const auto table = rrind::run_power_study(cfg, rrind::resolve_threads(a.threads));
    if (a.json_out != "-") rrind::write_power_csv(std::cout, table, a.timing);
    if (!a.json_out.empty()) write_json({{"config", rrind::to_json(cfg)}, {"rows", rrind::to_json(table, a.timing)}},
                                        a.json_out);
    return exit_ok;
}

struct GenerateArgs {
    std::string alternative;
    std::vector<std::string> params;
    std::string response;
    std::size_t n = 30;
    std::uint64_t seed = 1;
    std::string x_out, y_out;
};

int run_generate(const GenerateArgs& a) {
    rrind::AlternativeSpec spec;
    spec.name = rrind::parse_alternative(a.alternative);
    for (const auto& kv : a.params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--param expects key=value, got '" + kv + "'");
        std::size_t used = 0;
        const std::string value = kv.substr(eq + 1);
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("bad number in --param '" + kv + "'");
        spec.params[kv.substr(0, eq)] = v;
    }
    spec.response = a.response;
    spec.n = a.n;
    spec.seed = a.seed;
    const auto s = rrind::generate(spec);

    if (!a.x_out.empty() || !a.y_out.empty()) {
        if (a.x_out.empty() || a.y_out.empty()) throw std::invalid_argument("--x-out and --y-out go together");
        std::ofstream fx(a.x_out), fy(a.y_out);
        if (!fx || !fy) throw std::runtime_error("cannot write output files");
        rrind::write_points_csv(fx, s.xs);
        rrind::write_points_csv(fy, s.ys);
        return exit_ok;
    }
    const std::size_t p = s.dim_x(), q = s.dim_y();
    for (std::size_t k = 0; k < p; ++k) std::cout << (k ? "," : "") << "x" << k + 1;
    for (std::size_t k = 0; k < q; ++k) std::cout << ",y" << k + 1;
    std::cout << "\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t k = 0; k < p; ++k) std::cout << (k ? "," : "") << s.xs[i][k];
        for (std::size_t k = 0; k < q; ++k) std::cout << "," << s.ys[i][k];
        std::cout << "\n";
    }
    return exit_ok;
}

int run_sigma2(double r_max, std::size_t points, bool show_max) {
    if (show_max) {
        const auto m = rrind::sigma2_diagonal_max();
        std::cerr << "maximum " << std::setprecision(6) << m.value << " at r = " << m.argmax << "\n";
    }
    std::cout << "r,sigma2\n" << std::setprecision(10);
    for (const auto& [r, v] : rrind::sigma2_diagonal_curve(r_max, points)) std::cout << r << "," << v << "\n";
    return exit_ok;
}

int run_validate(const std::string& suite, std::uint64_t seed, int threads, const std::string& json_out) {
    rrind::ValidationReport rep;
    auto add = [&](const rrind::ValidationReport& r) { rep.checks.insert(rep.checks.end(), r.checks.begin(), r.checks.end()); };
    const bool all = suite == "all";
    if (all || suite == "oracles") add(rrind::validate_oracles(seed));
    if (all || suite == "lemma2") add(rrind::validate_lemma2(seed));
    if (all || suite == "sigma2") add(rrind::validate_sigma2());
    if (all || suite == "size") add(rrind::validate_size(seed, 500, 199, 30, rrind::resolve_threads(threads)));

    if (json_out == "-") {
        write_json(rrind::to_json(rep), "-");
    } else {
        for (const auto& c : rep.checks) {
            const char* verdict = c.passed ? "PASS" : c.gating ? "FAIL" : "info";
            std::cout << std::left << std::setw(5) << verdict << std::setw(9) << c.suite << std::setw(38) << c.name
                      << " measured=" << std::setprecision(6) << c.measured << " target=" << c.target
                      << " tol=" << c.tolerance;
            if (!c.detail.empty()) std::cout << "  " << c.detail;
            std::cout << "\n";
        }
        if (!json_out.empty()) write_json(rrind::to_json(rep), json_out);
    }
    return rep.passed() ? exit_ok : exit_failed_checks;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrence-rate independence test"};
    app.require_subcommand(1);

    TestArgs ta;
    auto* test = app.add_subcommand("test", "Permutation test on one paired sample");
    test->add_option("x", ta.x_path, "CSV of X observations (one row per observation)")->required();
    test->add_option("y", ta.y_path, "CSV of Y observations")->required();
    test->add_flag("--header", ta.header, "Skip the first CSV row");
    test->add_flag("--distances", ta.distances, "Inputs are precomputed n x n distance tables");
    test->add_flag("--normal-scores", ta.normal_scores, "Rank-transform each coordinate to normal scores first");
    test->add_option("--weights", ta.weights, "auto, N(mu,var) or N(mu,var)xN(mu,var)")->capture_default_str();
    test->add_option("--stat", ta.stat, "cvm or sup")->check(CLI::IsMember({"cvm", "sup"}))->capture_default_str();
    test->add_option("--perms", ta.perms, "Number of permutations")->capture_default_str();
    test->add_option("--seed", ta.seed, "Master seed")->capture_default_str();
    test->add_option("--estimator", ta.estimator, "paper (c/m) or plus_one ((c+1)/(m+1))")
        ->check(CLI::IsMember({"paper", "plus_one"}))
        ->capture_default_str();
    test->add_option("--level", ta.level, "Significance level for the exit code")->capture_default_str();
    test->add_option("--json", ta.json_out, "Write the result as JSON to a file, or - for stdout only");
    test->add_option("--threads", ta.threads, "Worker threads (default: RRIND_THREADS or all cores)");
    test->add_flag("--timing", ta.timing, "Include elapsed time in the output");

    PowerArgs pa;
    auto* power = app.add_subcommand("power", "Run a power study from a JSON config");
    power->add_option("config", pa.config, "Config file, or - for stdin")->required();
    power->add_option("--json", pa.json_out, "Write the table as JSON to a file, or - for stdout only");
    power->add_option("--threads", pa.threads, "Worker threads");
    power->add_flag("--timing", pa.timing, "Include per-cell elapsed time");

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "Draw a sample from one of the built-in models");
    gen->add_option("alternative", ga.alternative, "Model name")->required();
    gen->add_option("--param", ga.params, "Override a model parameter, key=value");
    gen->add_option("--response", ga.response, "Response family for series models");
    gen->add_option("-n,--n", ga.n, "Sample size")->capture_default_str();
    gen->add_option("--seed", ga.seed, "Seed")->capture_default_str();
    gen->add_option("--x-out", ga.x_out, "Write X rows to this CSV");
    gen->add_option("--y-out", ga.y_out, "Write Y rows to this CSV");

    double r_max = 6.0;
    std::size_t points = 120;
    bool show_max = false;
    auto* sig = app.add_subcommand("sigma2", "Emit the diagonal of the normal-model variance surface as CSV");
    sig->add_option("--r-max", r_max, "Largest radius")->capture_default_str();
    sig->add_option("--points", points, "Number of radii")->capture_default_str();
    sig->add_flag("--max", show_max, "Also report the maximum on stderr");

    std::string suite = "all";
    std::uint64_t vseed = 1;
    int vthreads = 0;
    std::string vjson;
    auto* val = app.add_subcommand("validate", "Run built-in self-check suites");
    val->add_option("suite", suite, "oracles, lemma2, sigma2, size or all")
        ->check(CLI::IsMember({"oracles", "lemma2", "sigma2", "size", "all"}))
        ->capture_default_str();
    val->add_option("--seed", vseed, "Seed")->capture_default_str();
    val->add_option("--threads", vthreads, "Worker threads");
    val->add_option("--json", vjson, "Write the report as JSON to a file, or - for stdout only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_error;
    }

    try {
        if (*test) return run_test(ta);
        if (*power) return run_power(pa);
        if (*gen) return run_generate(ga);
        if (*sig) return run_sigma2(r_max, points, show_max);
        if (*val) return run_validate(suite, vseed, vthreads, vjson);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
