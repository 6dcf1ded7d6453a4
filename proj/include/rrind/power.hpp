#pragma once

// Monte-Carlo power studies. A study is a grid of (alternative, n) cells;
// within a cell every test sees the same generated samples. Calibration is
// either a per-sample permutation p-value or a critical value estimated once
// per cell from null samples. Null samples pair the X part of one draw of the
// alternative with the Y part of an independent draw, so both marginals are
// those of the alternative.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "rrind/baselines.hpp"
#include "rrind/generators.hpp"
#include "rrind/parallel.hpp"
#include "rrind/permutation.hpp"
#include "rrind/statistic.hpp"
#include "rrind/transform.hpp"
#include "rrind/weights.hpp"

namespace rrind {

enum class TestId { rr_cvm, rr_sup, dcov, psk, hsic };
enum class Calibration { permutation, null_quantile };

inline const char* to_string(TestId t) {
    switch (t) {
    case TestId::rr_cvm: return "rr_cvm";
    case TestId::rr_sup: return "rr_sup";
    case TestId::dcov: return "dcov";
    case TestId::psk: return "psk";
    case TestId::hsic: return "hsic";
    }
    return "?";
}

inline const char* to_string(Calibration c) { return c == Calibration::permutation ? "permutation" : "null_quantile"; }

struct TestEntry {
    TestId id = TestId::rr_cvm;
    std::vector<std::string> weights;  ///< rr_cvm only; parsed with parse_weight_choice

    bool operator==(const TestEntry&) const = default;
};

struct PowerStudyConfig {
    std::vector<AlternativeSpec> alternatives;
    std::vector<TestEntry> tests;
    std::vector<std::size_t> n_values;
    double level = 0.05;
    std::size_t power_reps = 500;
    std::size_t perm_m = 200;
    Calibration calibration = Calibration::null_quantile;
    std::size_t null_reps = 5000;
    bool normal_scores = true;  ///< applies to the recurrence-rate tests
    PValueEstimator estimator = PValueEstimator::paper;
    std::uint64_t master_seed = 1;

    bool operator==(const PowerStudyConfig&) const = default;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }) == allowed.end())
            throw ConfigError(path + "." + it.key(), "unknown field");
    }
}

inline std::size_t get_count(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        throw ConfigError(path, "expected a non-negative integer");
    return j.get<std::size_t>();
}

inline double get_real(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

template <class F>
auto rethrow_at(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

inline AlternativeSpec parse_alternative_json(const json& j, const std::string& path) {
    if (j.is_string()) return parse_alternative_json(json{{"name", j}}, path);
    reject_unknown_keys(j, path, {"name", "params", "response"});
    if (!j.contains("name")) throw ConfigError(path + ".name", "missing");
    AlternativeSpec a;
    a.name = rethrow_at(path + ".name", [&] { return parse_alternative(get_string(j["name"], path + ".name")); });
    if (j.contains("params")) {
        const auto& p = j["params"];
        if (!p.is_object()) throw ConfigError(path + ".params", "expected an object");
        for (auto it = p.begin(); it != p.end(); ++it)
            a.params[it.key()] = get_real(it.value(), path + ".params." + it.key());
    }
    if (j.contains("response")) a.response = get_string(j["response"], path + ".response");
    rethrow_at(path, [&] {
        a.validate();
        return 0;
    });
    return a;
}

inline TestEntry parse_test_json(const json& j, const std::string& path) {
    if (j.is_string()) return parse_test_json(json{{"test", j}}, path);
    reject_unknown_keys(j, path, {"test", "weights"});
    if (!j.contains("test")) throw ConfigError(path + ".test", "missing");
    const std::string name = get_string(j["test"], path + ".test");
    TestEntry t;
    if (name == "rr_cvm") t.id = TestId::rr_cvm;
    else if (name == "rr_sup") t.id = TestId::rr_sup;
    else if (name == "dcov") t.id = TestId::dcov;
    else if (name == "psk") t.id = TestId::psk;
    else if (name == "hsic") t.id = TestId::hsic;
    else throw ConfigError(path + ".test", "unknown test '" + name + "'");
    if (j.contains("weights")) {
        if (t.id != TestId::rr_cvm) throw ConfigError(path + ".weights", "only rr_cvm takes weights");
        const auto& w = j["weights"];
        if (!w.is_array() || w.empty()) throw ConfigError(path + ".weights", "expected a non-empty array");
        for (std::size_t k = 0; k < w.size(); ++k) {
            const std::string p = path + ".weights[" + std::to_string(k) + "]";
            const std::string text = get_string(w[k], p);
            rethrow_at(p, [&] { return parse_weight_choice(text); });
            t.weights.push_back(text);
        }
    } else if (t.id == TestId::rr_cvm) {
        t.weights = {"N(1,1)"};
    }
    return t;
}

inline std::string alternative_label(const AlternativeSpec& a) {
    std::string out = to_string(a.name);
    std::vector<std::string> parts;
    for (const auto& [k, v] : a.params) {
        std::ostringstream os;
        os << k << "=" << v;
        parts.push_back(os.str());
    }
    if (!a.response.empty()) parts.push_back("response=" + a.response);
    if (parts.empty()) return out;
    out += "(";
    for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? ";" : "") + parts[k];
    return out + ")";
}

}  // namespace detail

inline PowerStudyConfig parse_power_config(const nlohmann::json& j) {
    detail::reject_unknown_keys(j, "$",
                                {"alternatives", "tests", "n_values", "level", "power_reps", "perm_m", "calibration",
                                 "null_reps", "normal_scores", "estimator", "master_seed"});
    PowerStudyConfig c;
    auto required_array = [&](const char* key) -> const nlohmann::json& {
        const std::string path = std::string("$.") + key;
        if (!j.contains(key)) throw ConfigError(path, "missing");
        const auto& a = j[key];
        if (!a.is_array() || a.empty()) throw ConfigError(path, "expected a non-empty array");
        return a;
    };
    const auto& alts = required_array("alternatives");
    for (std::size_t k = 0; k < alts.size(); ++k)
        c.alternatives.push_back(detail::parse_alternative_json(alts[k], "$.alternatives[" + std::to_string(k) + "]"));
    const auto& tests = required_array("tests");
    for (std::size_t k = 0; k < tests.size(); ++k)
        c.tests.push_back(detail::parse_test_json(tests[k], "$.tests[" + std::to_string(k) + "]"));
    const auto& ns = required_array("n_values");
    for (std::size_t k = 0; k < ns.size(); ++k) {
        const std::string p = "$.n_values[" + std::to_string(k) + "]";
        const std::size_t n = detail::get_count(ns[k], p);
        if (n < 4) throw ConfigError(p, "sample size must be >= 4");
        c.n_values.push_back(n);
    }
    if (j.contains("level")) c.level = detail::get_real(j["level"], "$.level");
    if (!(c.level > 0.0 && c.level < 1.0)) throw ConfigError("$.level", "must lie in (0, 1)");
    if (j.contains("power_reps")) c.power_reps = detail::get_count(j["power_reps"], "$.power_reps");
    if (c.power_reps < 1) throw ConfigError("$.power_reps", "must be >= 1");
    if (j.contains("perm_m")) c.perm_m = detail::get_count(j["perm_m"], "$.perm_m");
    if (j.contains("null_reps")) c.null_reps = detail::get_count(j["null_reps"], "$.null_reps");
    if (j.contains("calibration")) {
        const auto s = detail::get_string(j["calibration"], "$.calibration");
        if (s == "permutation") c.calibration = Calibration::permutation;
        else if (s == "null_quantile") c.calibration = Calibration::null_quantile;
        else throw ConfigError("$.calibration", "expected permutation or null_quantile");
    }
    if (c.calibration == Calibration::permutation && c.perm_m < min_permutations)
        throw ConfigError("$.perm_m", "must be >= 19");
    if (c.calibration == Calibration::null_quantile && c.null_reps < 100)
        throw ConfigError("$.null_reps", "must be >= 100");
    if (j.contains("normal_scores")) {
        if (!j["normal_scores"].is_boolean()) throw ConfigError("$.normal_scores", "expected a boolean");
        c.normal_scores = j["normal_scores"].get<bool>();
    }
    if (j.contains("estimator")) {
        const auto s = detail::get_string(j["estimator"], "$.estimator");
        if (s == "paper") c.estimator = PValueEstimator::paper;
        else if (s == "plus_one") c.estimator = PValueEstimator::plus_one;
        else throw ConfigError("$.estimator", "expected paper or plus_one");
    }
    if (j.contains("master_seed")) {
        if (!j["master_seed"].is_number_unsigned()) throw ConfigError("$.master_seed", "expected an unsigned integer");
        c.master_seed = j["master_seed"].get<std::uint64_t>();
    }
    for (std::size_t t = 0; t < c.tests.size(); ++t) {
        if (c.tests[t].id != TestId::psk) continue;
        for (std::size_t a = 0; a < c.alternatives.size(); ++a) {
            const auto [dx, dy] = alternative_dims(c.alternatives[a]);
            if (dx != 1 || dy != 1)
                throw ConfigError("$.tests[" + std::to_string(t) + "]",
                                  "psk needs scalar marginals, alternatives[" + std::to_string(a) + "] is not");
        }
    }
    return c;
}

inline PowerStudyConfig parse_power_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    return parse_power_config(j);
}

inline nlohmann::json to_json(const PowerStudyConfig& c) {
    nlohmann::json j;
    auto& alts = j["alternatives"] = nlohmann::json::array();
    for (const auto& a : c.alternatives) {
        nlohmann::json ja{{"name", to_string(a.name)}};
        if (!a.params.empty()) ja["params"] = a.params;
        if (!a.response.empty()) ja["response"] = a.response;
        alts.push_back(std::move(ja));
    }
    auto& tests = j["tests"] = nlohmann::json::array();
    for (const auto& t : c.tests) {
        nlohmann::json jt{{"test", to_string(t.id)}};
        if (t.id == TestId::rr_cvm) jt["weights"] = t.weights;
        tests.push_back(std::move(jt));
    }
    j["n_values"] = c.n_values;
    j["level"] = c.level;
    j["power_reps"] = c.power_reps;
    j["perm_m"] = c.perm_m;
    j["calibration"] = to_string(c.calibration);
    j["null_reps"] = c.null_reps;
    j["normal_scores"] = c.normal_scores;
    j["estimator"] = to_string(c.estimator);
    j["master_seed"] = c.master_seed;
    return j;
}

/// Kernel operations the study will perform, roughly reps * m * N log N.
inline double estimated_operations(const PowerStudyConfig& c) {
    double total = 0.0;
    for (std::size_t n : c.n_values) {
        const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
        const double kernel = pairs * std::log2(std::max(2.0, pairs));
        double stats = 0.0;
        for (const auto& t : c.tests) stats += t.id == TestId::rr_cvm ? static_cast<double>(t.weights.size()) : 1.0;
        const double per_sample = c.calibration == Calibration::permutation
                                      ? static_cast<double>(c.power_reps) * static_cast<double>(c.perm_m + 1)
                                      : static_cast<double>(c.power_reps + c.null_reps);
        total += per_sample * kernel * stats;
    }
    return total * static_cast<double>(c.alternatives.size());
}

inline constexpr double operations_warning_threshold = 1e10;

inline std::vector<std::string> config_warnings(const PowerStudyConfig& c) {
    std::vector<std::string> out;
    const double ops = estimated_operations(c);
    if (ops > operations_warning_threshold) {
        std::ostringstream os;
        os << "estimated " << std::scientific << std::setprecision(2) << ops
           << " kernel operations; expect a long run";
        out.push_back(os.str());
    }
    return out;
}

struct PowerRow {
    std::string alternative;
    std::size_t n = 0;
    std::string test;
    std::string weight;  ///< "-" for tests without weights
    std::size_t rejections = 0;
    std::size_t reps = 0;
    double elapsed = 0.0;  ///< seconds spent on the row's (alternative, n) cell

    double power() const { return static_cast<double>(rejections) / static_cast<double>(reps); }
    double standard_error() const {
        const double p = power();
        return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
    }
    auto key() const { return std::tie(alternative, n, test, weight); }
};

struct PowerTable {
    std::vector<PowerRow> rows;  ///< sorted by key

    const PowerRow* find(const std::string& alternative, std::size_t n, const std::string& test,
                         const std::string& weight = "-") const {
        for (const auto& r : rows)
            if (r.alternative == alternative && r.n == n && r.test == test && r.weight == weight) return &r;
        return nullptr;
    }
};

namespace detail {

// One scalar statistic evaluated on every sample of a cell.
struct StatSlot {
    std::string test;
    std::string weight;
    TestId id;
    WeightChoice choice;
};

inline std::vector<StatSlot> stat_slots(const PowerStudyConfig& c) {
    std::vector<StatSlot> out;
    for (const auto& t : c.tests) {
        switch (t.id) {
        case TestId::rr_cvm:
            for (const auto& w : t.weights) out.push_back({"rr_cvm", w, t.id, parse_weight_choice(w)});
            break;
        case TestId::psk:
            out.push_back({"psk_pearson", "-", t.id, {}});
            out.push_back({"psk_spearman", "-", t.id, {}});
            out.push_back({"psk_kendall", "-", t.id, {}});
            break;
        default: out.push_back({to_string(t.id), "-", t.id, {}});
        }
    }
    return out;
}

inline PairedSample sample_of(const AlternativeSpec& alt, std::size_t n, std::uint64_t seed) {
    AlternativeSpec s = alt;
    s.n = n;
    s.seed = seed;
    return generate(s);
}

inline PairedSample null_sample_of(const AlternativeSpec& alt, std::size_t n, std::uint64_t seed) {
    PairedSample a = sample_of(alt, n, derive_seed(seed, 0));
    PairedSample b = sample_of(alt, n, derive_seed(seed, 1));
    a.ys = std::move(b.ys);
    a.metric_y = b.metric_y;
    return a;
}

// Statistic values per slot; PSK slots hold classical p-values.
inline std::vector<double> evaluate_slots(const std::vector<StatSlot>& slots, const PairedSample& raw,
                                          bool normal_scores) {
    std::vector<double> out(slots.size(), 0.0);
    const auto [rdx, rdy] = distance_matrices(raw);
    bool need_rr = false;
    for (const auto& s : slots) need_rr |= s.id == TestId::rr_cvm || s.id == TestId::rr_sup;
    PairArrays rr_pairs;
    if (need_rr) {
        if (normal_scores) {
            const auto [sdx, sdy] = distance_matrices(rrind::normal_scores(raw));
            rr_pairs = pair_arrays(sdx, sdy);
        } else {
            rr_pairs = pair_arrays(rdx, rdy);
        }
    }
    std::optional<PskResult> psk;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const auto& s = slots[k];
        switch (s.id) {
        case TestId::rr_cvm: out[k] = tn_fast(rr_pairs, s.choice.resolve(rr_pairs)).t; break;
        case TestId::rr_sup: out[k] = tsup(rr_pairs).t; break;
        case TestId::dcov: out[k] = distance_covariance(rdx, rdy).dcov2; break;
        case TestId::hsic: out[k] = hsic_statistic(rdx, rdy); break;
        case TestId::psk:
            if (!psk) psk = psk_tests(raw);
            out[k] = s.test == "psk_pearson"    ? psk->pearson.p_value
                     : s.test == "psk_spearman" ? psk->spearman.p_value
                                                : psk->kendall.p_value;
            break;
        }
    }
    return out;
}

// Permutation p-value of one slot on one sample.
inline double permutation_slot_pvalue(const StatSlot& s, const PairedSample& raw, const PowerStudyConfig& c,
                                      std::uint64_t seed) {
    switch (s.id) {
    case TestId::rr_cvm:
    case TestId::rr_sup: {
        const auto [dx, dy] = distance_matrices(c.normal_scores ? rrind::normal_scores(raw) : raw);
        const auto kind = s.id == TestId::rr_sup ? StatKind::sup : StatKind::cvm;
        return permutation_pvalue(dx, dy, s.choice, kind, c.perm_m, seed, c.estimator, 1).p_value;
    }
    case TestId::dcov: return dcov_test(raw, c.perm_m, seed, c.estimator, 1).p_value;
    case TestId::hsic: return hsic_test(raw, c.perm_m, seed, c.estimator, 1).p_value;
    case TestId::psk: break;
    }
    throw std::logic_error("permutation_slot_pvalue on a PSK slot");
}

}  // namespace detail

/// Seeds: cell (a, n) uses derive_seed(master, a, n); sample r of that cell
/// uses derive_seed(cell, 0, r), its permutations derive_seed(cell, 2, r)
/// and null sample r derive_seed(cell, 1, r).
inline PowerTable run_power_study(const PowerStudyConfig& c, unsigned threads = 1) {
    const auto slots = detail::stat_slots(c);
    PowerTable table;
    for (std::size_t a = 0; a < c.alternatives.size(); ++a) {
        const auto& alt = c.alternatives[a];
        const std::string alt_label = detail::alternative_label(alt);
        for (std::size_t n : c.n_values) {
            const auto start = std::chrono::steady_clock::now();
            const std::uint64_t cell = derive_seed(c.master_seed, a, n);

            std::vector<double> thresholds(slots.size(), 0.0);
            if (c.calibration == Calibration::null_quantile) {
                std::vector<std::vector<double>> null_values(c.null_reps);
                parallel_for(c.null_reps, threads, [&](std::size_t r) {
                    null_values[r] = detail::evaluate_slots(
                        slots, detail::null_sample_of(alt, n, derive_seed(cell, 1, r)), c.normal_scores);
                });
                std::vector<double> column(c.null_reps);
                for (std::size_t k = 0; k < slots.size(); ++k) {
                    if (slots[k].id == TestId::psk) continue;
                    for (std::size_t r = 0; r < c.null_reps; ++r) column[r] = null_values[r][k];
                    thresholds[k] = empirical_quantile(column, 1.0 - c.level);
                }
            }

            std::vector<std::vector<char>> reject(c.power_reps, std::vector<char>(slots.size(), 0));
            parallel_for(c.power_reps, threads, [&](std::size_t r) {
                const PairedSample raw = detail::sample_of(alt, n, derive_seed(cell, 0, r));
                if (c.calibration == Calibration::null_quantile) {
                    const auto v = detail::evaluate_slots(slots, raw, c.normal_scores);
                    for (std::size_t k = 0; k < slots.size(); ++k)
                        reject[r][k] = slots[k].id == TestId::psk ? v[k] < c.level : v[k] > thresholds[k];
                    return;
                }
                std::optional<PskResult> psk;
                for (std::size_t k = 0; k < slots.size(); ++k) {
                    double p;
                    if (slots[k].id == TestId::psk) {
                        if (!psk) psk = psk_tests(raw);
                        p = slots[k].test == "psk_pearson"    ? psk->pearson.p_value
                            : slots[k].test == "psk_spearman" ? psk->spearman.p_value
                                                              : psk->kendall.p_value;
                    } else {
                        p = detail::permutation_slot_pvalue(slots[k], raw, c, derive_seed(cell, 2, r));
                    }
                    reject[r][k] = p < c.level;
                }
            });

            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::size_t psk_best = 0;
            bool has_psk = false;
            for (std::size_t k = 0; k < slots.size(); ++k) {
                PowerRow row{alt_label, n, slots[k].test, slots[k].weight, 0, c.power_reps, elapsed};
                for (std::size_t r = 0; r < c.power_reps; ++r) row.rejections += static_cast<std::size_t>(reject[r][k]);
                if (slots[k].id == TestId::psk) {
                    has_psk = true;
                    psk_best = std::max(psk_best, row.rejections);
                }
                table.rows.push_back(std::move(row));
            }
            if (has_psk) table.rows.push_back({alt_label, n, "psk", "-", psk_best, c.power_reps, elapsed});
        }
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const PowerRow& x, const PowerRow& y) { return x.key() < y.key(); });
    return table;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace detail

inline void write_power_csv(std::ostream& os, const PowerTable& t, bool timing = false) {
    os << "alternative,n,test,weight,power,se,reps";
    if (timing) os << ",elapsed";
    os << "\n";
    for (const auto& r : t.rows) {
        os << detail::csv_field(r.alternative) << ',' << r.n << ',' << r.test << ',' << detail::csv_field(r.weight)
           << ',' << std::fixed << std::setprecision(3) << r.power() << ',' << r.standard_error() << ',' << r.reps;
        if (timing) os << ',' << r.elapsed;
        os << std::defaultfloat << "\n";
    }
}

inline nlohmann::json to_json(const PowerTable& t, bool timing = false) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json j{{"alternative", r.alternative}, {"n", r.n},           {"test", r.test},
                         {"weight", r.weight},           {"power", r.power()}, {"se", r.standard_error()},
                         {"rejections", r.rejections},   {"reps", r.reps}};
        if (timing) j["elapsed"] = r.elapsed;
        rows.push_back(std::move(j));
    }
    return rows;
}

}  // namespace rrind
