#pragma once

// Run configuration shared by every CLI subcommand. Fields are described by
// one table that drives JSON (de)serialization and flag registration, so a
// JSON key is always spelled like its command-line flag.

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pfbp/data.hpp"
#include "pfbp/engine.hpp"
#include "pfbp/error.hpp"
#include "pfbp/experiments.hpp"
#include "pfbp/heuristics.hpp"

namespace pfbp {

struct RunConfig {
    std::string command = "select";

    // data / partitioning
    std::string data;
    std::string target = "T";
    std::uint64_t max_vars = 10;
    std::uint64_t df = 0;  // 0: max_vars + 1
    std::string rule = "std";
    double c_rule = 10.0;
    std::uint64_t workers = 1;
    double oversubscription = 1.0;
    std::uint64_t group_size = 15;
    std::uint64_t seed = 1;

    // engine / heuristics
    std::uint64_t runs = 2;
    double alpha = 0.01;
    std::uint64_t bootstrap_b = 1000;
    double p_drop = 0.99;
    double p_stop = 0.99;
    double p_return = 0.95;
    double er_tol = 0.9;
    bool score_test = true;
    bool adaptive_groups = true;
    std::uint64_t max_iter = 50;
    double grad_tol = 1e-6;

    // outputs
    std::string out;
    std::string curve;
    std::string dump_evidence;
    std::string truth;
    double holdout = 0.0;

    // generators
    std::uint64_t nodes = 101;
    double connectivity = 3.0;
    double class_freq = 0.5;
    double error_sd = 1.0;
    std::uint64_t samples = 10000;
    std::string format;  // csv or bin; empty: from the output extension
    std::uint64_t snps = 1000;
    std::uint64_t causal = 100;
    double heritability = 0.7;

    // agreement experiment
    std::uint64_t repetitions = 50;
    std::vector<std::uint64_t> sample_grid{5000, 10000};
    std::vector<std::uint64_t> subset_grid{2, 5, 10};
    std::vector<std::uint64_t> conditioning{0, 1, 2, 3};
    std::vector<double> class_freqs{0.5};
    std::vector<double> error_sds{0.01, 0.1, 1.0};

    // bench
    std::vector<std::uint64_t> workers_grid{1, 2};
    std::uint64_t repeats = 1;
    std::uint64_t networks = 1;

    bool operator==(const RunConfig&) const = default;
};

enum CommandMask : unsigned {
    kSelect = 1u << 0,
    kGenBn = 1u << 1,
    kGenSnp = 1u << 2,
    kAgreement = 1u << 3,
    kBench = 1u << 4,
    kAll = 0x1Fu,
};

using FieldRef = std::variant<std::string RunConfig::*, std::uint64_t RunConfig::*, double RunConfig::*,
                              bool RunConfig::*, std::vector<std::uint64_t> RunConfig::*,
                              std::vector<double> RunConfig::*>;

struct FieldSpec {
    const char* key;  // JSON key == long flag name
    FieldRef ref;
    unsigned commands;
    const char* help;
};

inline const std::vector<FieldSpec>& field_table() {
    static const std::vector<FieldSpec> table = {
        {"data", &RunConfig::data, kSelect, "input dataset (.csv or .bin)"},
        {"target", &RunConfig::target, kSelect, "target column name or zero-based index (CSV)"},
        {"max-vars", &RunConfig::max_vars, kSelect | kAgreement | kBench, "maximum number of selected features"},
        {"df", &RunConfig::df, kSelect, "degrees of freedom for subset sizing (0: max-vars + 1)"},
        {"rule", &RunConfig::rule, kSelect | kBench, "sample-size rule: std or epv"},
        {"c-rule", &RunConfig::c_rule, kSelect | kBench, "sample-size rule constant c"},
        {"workers", &RunConfig::workers, kSelect | kAgreement, "worker threads"},
        {"oversubscription", &RunConfig::oversubscription, kSelect, "feature-subset oversubscription factor"},
        {"group-size", &RunConfig::group_size, kSelect, "sample subsets per group (C)"},
        {"seed", &RunConfig::seed, kAll, "random seed"},
        {"runs", &RunConfig::runs, kSelect | kBench, "maximum number of runs"},
        {"alpha", &RunConfig::alpha, kSelect | kBench, "significance level"},
        {"bootstrap-b", &RunConfig::bootstrap_b, kSelect | kBench, "bootstrap resamples per checkpoint"},
        {"p-drop", &RunConfig::p_drop, kSelect | kBench, "early dropping probability threshold (>1 disables)"},
        {"p-stop", &RunConfig::p_stop, kSelect | kBench, "early stopping probability threshold (>1 disables)"},
        {"p-return", &RunConfig::p_return, kSelect | kBench, "early return probability threshold (>1 disables)"},
        {"er-tol", &RunConfig::er_tol, kSelect | kBench, "early return likelihood-ratio tolerance t in (0,1]"},
        {"score-test", &RunConfig::score_test, kSelect, "use the score test while nothing is selected"},
        {"adaptive-groups", &RunConfig::adaptive_groups, kSelect, "double the group stride when nothing changes"},
        {"max-iter", &RunConfig::max_iter, kSelect | kAgreement, "Newton iteration cap"},
        {"grad-tol", &RunConfig::grad_tol, kSelect | kAgreement, "gradient max-norm tolerance"},
        {"out", &RunConfig::out, kAll, "output file"},
        {"curve", &RunConfig::curve, kSelect, "accuracy-curve CSV (needs --holdout)"},
        {"dump-evidence", &RunConfig::dump_evidence, kSelect, "directory for per-iteration evidence CSVs"},
        {"truth", &RunConfig::truth, kSelect | kGenBn | kGenSnp, "ground-truth JSON (read by select, written by generators)"},
        {"holdout", &RunConfig::holdout, kSelect, "fraction of rows held out for accuracy curves"},
        {"nodes", &RunConfig::nodes, kGenBn | kAgreement | kBench, "network nodes including the target"},
        {"connectivity", &RunConfig::connectivity, kGenBn | kAgreement | kBench, "average node degree"},
        {"class-freq", &RunConfig::class_freq, kGenBn, "P(T = 1)"},
        {"error-sd", &RunConfig::error_sd, kGenBn, "error standard deviation"},
        {"samples", &RunConfig::samples, kGenBn | kGenSnp | kBench, "rows to generate"},
        {"format", &RunConfig::format, kGenBn | kGenSnp, "output format: csv or bin"},
        {"snps", &RunConfig::snps, kGenSnp, "number of SNPs"},
        {"causal", &RunConfig::causal, kGenSnp, "number of causal SNPs"},
        {"heritability", &RunConfig::heritability, kGenSnp, "trait heritability h2 in (0,1)"},
        {"repetitions", &RunConfig::repetitions, kAgreement, "repetitions per grid cell"},
        {"sample-grid", &RunConfig::sample_grid, kAgreement, "samples per subset"},
        {"subset-grid", &RunConfig::subset_grid, kAgreement, "numbers of subsets"},
        {"conditioning", &RunConfig::conditioning, kAgreement, "conditioning-set sizes"},
        {"class-freqs", &RunConfig::class_freqs, kAgreement, "P(T = 1) values"},
        {"error-sds", &RunConfig::error_sds, kAgreement, "error standard deviations, cycled over repetitions"},
        {"workers-grid", &RunConfig::workers_grid, kBench, "worker counts to time"},
        {"repeats", &RunConfig::repeats, kBench, "timed runs per point"},
        {"networks", &RunConfig::networks, kBench, "networks per point (seconds are summed)"},
    };
    return table;
}

inline unsigned command_mask(const std::string& command) {
    if (command == "select") return kSelect;
    if (command == "gen-bn") return kGenBn;
    if (command == "gen-snp") return kGenSnp;
    if (command == "agreement") return kAgreement;
    if (command == "bench") return kBench;
    throw ConfigError("unknown command '" + command + "'");
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json::object();
    j["command"] = c.command;
    for (const auto& f : field_table())
        std::visit([&](auto member) { j[f.key] = c.*member; }, f.ref);
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "command") {
            if (!value.is_string()) throw ConfigError("'command' must be a string");
            c.command = value.get<std::string>();
            continue;
        }
        const FieldSpec* spec = nullptr;
        for (const auto& f : field_table())
            if (key == f.key) spec = &f;
        if (!spec) throw ConfigError("unknown configuration key '" + key + "'");
        try {
            std::visit(
                [&](auto member) {
                    using T = std::remove_reference_t<decltype(c.*member)>;
                    if constexpr (std::is_same_v<T, std::uint64_t>) {
                        if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
                            throw ConfigError("'" + key + "' must be a non-negative integer");
                    } else if constexpr (std::is_same_v<T, double>) {
                        if (!value.is_number()) throw ConfigError("'" + key + "' must be a number");
                    } else if constexpr (std::is_same_v<T, bool>) {
                        if (!value.is_boolean()) throw ConfigError("'" + key + "' must be a boolean");
                    } else if constexpr (std::is_same_v<T, std::string>) {
                        if (!value.is_string()) throw ConfigError("'" + key + "' must be a string");
                    } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
                        if (!value.is_array()) throw ConfigError("'" + key + "' must be an array");
                        for (const auto& e : value)
                            if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0))
                                throw ConfigError("'" + key + "' entries must be non-negative integers");
                    } else {
                        if (!value.is_array()) throw ConfigError("'" + key + "' must be an array");
                        for (const auto& e : value)
                            if (!e.is_number()) throw ConfigError("'" + key + "' entries must be numbers");
                    }
                    c.*member = value.get<T>();
                },
                spec->ref);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad value for '" + key + "': " + e.what());
        }
    }
}

/// PFBP_WORKERS if set to a positive integer, else 1.
inline std::uint64_t default_workers() {
    if (const char* env = std::getenv("PFBP_WORKERS")) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
    }
    return 1;
}

inline BootstrapConfig bootstrap_config(const RunConfig& c) {
    BootstrapConfig b;
    b.B = c.bootstrap_b;
    b.p_drop = c.p_drop;
    b.p_stop = c.p_stop;
    b.p_return = c.p_return;
    b.log_tol = std::log(c.er_tol);
    b.alpha = c.alpha;
    b.seed = c.seed;
    return b;
}

inline LogisticOptions logistic_options(const RunConfig& c) {
    LogisticOptions o;
    o.max_iter = static_cast<int>(c.max_iter);
    o.grad_tol = c.grad_tol;
    return o;
}

inline PartitionParams partition_params(const RunConfig& c) {
    PartitionParams p;
    p.max_vars = c.max_vars;
    p.c_rule = c.c_rule;
    p.rule = parse_rule(c.rule);
    p.workers = c.workers;
    p.oversubscription = c.oversubscription;
    p.group_size = c.group_size;
    p.seed = c.seed;
    if (c.df > 0) p.df_override = c.df;
    return p;
}

inline EngineConfig engine_config(const RunConfig& c) {
    EngineConfig e;
    e.bootstrap = bootstrap_config(c);
    e.max_vars = c.max_vars;
    e.max_runs = c.runs;
    e.workers = c.workers;
    e.univariate_score_test = c.score_test;
    e.adaptive_groups = c.adaptive_groups;
    e.logistic = logistic_options(c);
    return e;
}

/// Checks every field the command uses; throws ConfigError on the first problem.
inline void validate(const RunConfig& c) {
    const unsigned mask = command_mask(c.command);
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (c.out.empty()) fail("--out is required");
    if (mask & kSelect) {
        if (c.data.empty()) fail("--data is required");
        if (c.max_vars < 1) fail("--max-vars must be at least 1");
        if (c.runs < 1) fail("--runs must be at least 1");
        if (c.workers < 1) fail("--workers must be at least 1");
        if (c.group_size < 1) fail("--group-size must be at least 1");
        if (!(c.c_rule > 0.0)) fail("--c-rule must be positive");
        if (!(c.oversubscription > 0.0)) fail("--oversubscription must be positive");
        if (c.holdout != 0.0 && !in_unit(c.holdout)) fail("--holdout must lie in [0,1)");
        if (!c.curve.empty() && c.holdout == 0.0) fail("--curve needs --holdout");
        if (c.max_iter < 1) fail("--max-iter must be at least 1");
        if (!(c.grad_tol > 0.0)) fail("--grad-tol must be positive");
        if (!(c.er_tol > 0.0 && c.er_tol <= 1.0)) fail("--er-tol must lie in (0,1]");
        parse_rule(c.rule);
        bootstrap_config(c).validate();
    }
    if (mask & (kGenBn | kAgreement | kBench)) {
        if (c.nodes < 2) fail("--nodes must be at least 2");
        if (!(c.connectivity > 0.0 && c.connectivity < static_cast<double>(c.nodes)))
            fail("--connectivity must lie in (0, nodes)");
    }
    if (mask & kGenBn) {
        if (!in_unit(c.class_freq)) fail("--class-freq must lie in (0,1)");
        if (!(c.error_sd > 0.0)) fail("--error-sd must be positive");
    }
    if (mask & (kGenBn | kGenSnp)) {
        if (c.samples < 2) fail("--samples must be at least 2");
        if (!c.format.empty() && c.format != "csv" && c.format != "bin") fail("--format must be csv or bin");
    }
    if (mask & kGenSnp) {
        if (c.snps < 1) fail("--snps must be at least 1");
        if (c.causal < 1 || c.causal > c.snps) fail("--causal must lie in [1, snps]");
        if (!in_unit(c.heritability)) fail("--heritability must lie in (0,1)");
    }
    if (mask & kAgreement) {
        if (c.repetitions < 1) fail("--repetitions must be at least 1");
        if (c.sample_grid.empty() || c.subset_grid.empty() || c.conditioning.empty() || c.class_freqs.empty() ||
            c.error_sds.empty())
            fail("agreement grids must be non-empty");
        for (auto s : c.sample_grid)
            if (s < 2) fail("--sample-grid entries must be at least 2");
        for (auto m : c.subset_grid)
            if (m < 1) fail("--subset-grid entries must be at least 1");
        for (auto f : c.class_freqs)
            if (!in_unit(f)) fail("--class-freqs entries must lie in (0,1)");
        for (auto s : c.error_sds)
            if (!(s > 0.0)) fail("--error-sds entries must be positive");
        if (c.workers < 1) fail("--workers must be at least 1");
    }
    if (mask & kBench) {
        if (c.samples < 100) fail("--samples must be at least 100 for bench");
        if (c.workers_grid.empty()) fail("--workers-grid must be non-empty");
        for (auto w : c.workers_grid)
            if (w < 1) fail("--workers-grid entries must be at least 1");
        if (c.repeats < 1) fail("--repeats must be at least 1");
        if (c.networks < 1) fail("--networks must be at least 1");
        parse_rule(c.rule);
        bootstrap_config(c).validate();
    }
}

}  // namespace pfbp
