#pragma once

// Simulation experiments: agreement between global and Fisher-combined
// local p-values, back-solving the sample-size constant of the STD and EPV
// rules, and runtime scaling of the selection engine.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfbp/citest.hpp"
#include "pfbp/data.hpp"
#include "pfbp/engine.hpp"
#include "pfbp/heuristics.hpp"
#include "pfbp/meta.hpp"
#include "pfbp/synth.hpp"
#include "pfbp/thread_pool.hpp"

namespace pfbp {

// ===========================================================================
// Global vs combined p-values
// ===========================================================================

/// ln p of "candidate independent of T given conditioning" for each
/// candidate, on the given rows.
inline std::vector<double> candidate_log_p(const Dataset& ds, std::span<const std::size_t> rows,
                                           std::span<const std::size_t> conditioning,
                                           std::span<const std::size_t> candidates, const LogisticOptions& opts = {}) {
    const auto y = detail::gather_target(ds, rows);
    const Eigen::MatrixXd XS = detail::gather(ds, rows, conditioning);
    std::vector<double> out(candidates.size(), 0.0);
    if (!detail::both_classes(y)) return out;
    const auto null_fit = fit_logistic(XS, y, opts);
    Eigen::VectorXd x(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double* src = ds.values.col(static_cast<Eigen::Index>(candidates[c])).data();
        for (std::size_t r = 0; r < rows.size(); ++r) x[static_cast<Eigen::Index>(r)] = src[rows[r]];
        out[c] = lrt_given_null(null_fit, XS, x, y, opts).log_p;
    }
    return out;
}

/// Position of the smallest value; ties go to the first.
inline std::size_t argmin_index(std::span<const double> v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

struct AgreementOutcome {
    std::size_t global_choice = 0;
    std::size_t combined_choice = 0;
    bool agree() const { return global_choice == combined_choice; }
};

/// Picks the best candidate on all `rows` and, separately, by Fisher-combining
/// per-subset p-values over `m` equal contiguous chunks of `rows`.
inline AgreementOutcome compare_global_and_combined(const Dataset& ds, std::span<const std::size_t> rows,
                                                    std::size_t m, std::span<const std::size_t> conditioning,
                                                    std::span<const std::size_t> candidates,
                                                    const LogisticOptions& opts = {}) {
    detail::require(m >= 1 && m <= rows.size(), "invalid number of subsets");
    detail::require(!candidates.empty(), "no candidates");
    const auto global = candidate_log_p(ds, rows, conditioning, candidates, opts);
    AgreementOutcome out;
    out.global_choice = candidates[argmin_index(global)];
    if (m == 1) {
        out.combined_choice = out.global_choice;
        return out;
    }
    Eigen::MatrixXd local(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(candidates.size()));
    const std::size_t base = rows.size() / m, extra = rows.size() % m;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t len = base + (i < extra ? 1 : 0);
        const auto lp = candidate_log_p(ds, rows.subspan(offset, len), conditioning, candidates, opts);
        for (std::size_t c = 0; c < lp.size(); ++c)
            local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = lp[c];
        offset += len;
    }
    EvidenceMatrices ev = EvidenceMatrices::empty({candidates.begin(), candidates.end()});
    append_group(ev, local, Eigen::MatrixXd::Zero(local.rows(), local.cols()), candidates);
    // All columns share K, so the largest Fisher statistic is the smallest combined p.
    const Eigen::VectorXd stats = fisher_statistics(ev);
    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c)
        if (stats[static_cast<Eigen::Index>(c)] > stats[static_cast<Eigen::Index>(best)]) best = c;
    out.combined_choice = candidates[best];
    return out;
}

struct AgreementParams {
    std::size_t n_nodes = 101;
    double connectivity = 10.0;
    std::vector<double> class_freqs{0.5};
    std::vector<double> error_sds{0.01, 0.1, 1.0};  // cycled over repetitions
    std::vector<std::size_t> conditioning_sizes{0, 1, 2, 3};
    std::vector<std::size_t> samples_per_subset{5000, 10000};
    std::vector<std::size_t> subsets{2, 5, 10};
    std::size_t repetitions = 50;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    LogisticOptions logistic;
};

struct AgreementCell {
    double class_freq = 0.5;
    std::size_t conditioning = 0;
    std::size_t samples_per_subset = 0;
    std::size_t subsets = 1;
    std::size_t repetitions = 0;
    std::size_t agreements = 0;

    double agreement() const {
        return repetitions == 0 ? 0.0 : static_cast<double>(agreements) / static_cast<double>(repetitions);
    }
};

/// Each repetition draws a fresh network and dataset; for each conditioning
/// size k it conditions on k random Markov-blanket members and compares the
/// global and combined choices over every (samples per subset, subsets) cell,
/// using the first s*m rows of a shuffled sample.
inline std::vector<AgreementCell> run_agreement(const AgreementParams& p) {
    detail::require(p.repetitions >= 1, "repetitions must be positive");
    detail::require(!p.samples_per_subset.empty() && !p.subsets.empty(), "empty sample grid");
    std::size_t max_rows = 0;
    for (auto s : p.samples_per_subset)
        for (auto m : p.subsets) max_rows = std::max(max_rows, s * m);

    struct Key {
        std::size_t f, k, s, m;
        bool operator<(const Key& o) const { return std::tie(f, k, s, m) < std::tie(o.f, o.k, o.s, o.m); }
    };
    std::vector<AgreementCell> cells;
    std::map<Key, std::size_t> index;
    for (std::size_t f = 0; f < p.class_freqs.size(); ++f)
        for (std::size_t k = 0; k < p.conditioning_sizes.size(); ++k)
            for (std::size_t s = 0; s < p.samples_per_subset.size(); ++s)
                for (std::size_t m = 0; m < p.subsets.size(); ++m) {
                    index[{f, k, s, m}] = cells.size();
                    cells.push_back({p.class_freqs[f], p.conditioning_sizes[k], p.samples_per_subset[s], p.subsets[m], 0, 0});
                }

    // One job per (class frequency, repetition); results are reduced in job order.
    const std::size_t n_jobs = p.class_freqs.size() * p.repetitions;
    std::vector<std::vector<std::uint8_t>> agree(n_jobs, std::vector<std::uint8_t>(cells.size(), 2));
    ThreadPool pool(p.workers);
    pool.parallel_for(n_jobs, [&](std::size_t job) {
        const std::size_t f = job / p.repetitions, rep = job % p.repetitions;
        const std::uint64_t seed = detail::mix_seed(p.seed, job);
        const double sd = p.error_sds[rep % p.error_sds.size()];
        const auto net = generate_bn(p.n_nodes, p.connectivity, sd, p.class_freqs[f], seed);
        const auto sample = sample_bn(net, max_rows, detail::mix_seed(seed, 1));
        std::mt19937_64 rng(detail::mix_seed(seed, 2));
        const auto& mb = sample.truth;
        for (std::size_t k = 0; k < p.conditioning_sizes.size(); ++k) {
            std::vector<std::size_t> cond = mb;
            std::shuffle(cond.begin(), cond.end(), rng);
            cond.resize(std::min(cond.size(), p.conditioning_sizes[k]));
            std::sort(cond.begin(), cond.end());
            std::vector<std::size_t> cand;
            for (std::size_t j = 0; j < sample.data.n_features(); ++j)
                if (!std::binary_search(cond.begin(), cond.end(), j)) cand.push_back(j);
            for (std::size_t s = 0; s < p.samples_per_subset.size(); ++s)
                for (std::size_t m = 0; m < p.subsets.size(); ++m) {
                    const std::size_t n = p.samples_per_subset[s] * p.subsets[m];
                    std::vector<std::size_t> rows(n);
                    std::iota(rows.begin(), rows.end(), std::size_t{0});
                    const auto y = detail::gather_target(sample.data, rows);
                    if (!detail::both_classes(y)) continue;
                    const auto o = compare_global_and_combined(sample.data, rows, p.subsets[m], cond, cand, p.logistic);
                    agree[job][index[{f, k, s, m}]] = o.agree() ? 1 : 0;
                }
        }
    });
    for (const auto& row : agree)
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (row[c] != 2) {
                ++cells[c].repetitions;
                cells[c].agreements += row[c];
            }
    return cells;
}

// ===========================================================================
// Back-solving the sample-size constant
// ===========================================================================

/// c such that required_subset_size(p1, df, c, rule) equals s (before rounding).
inline double back_solve_c(double s, double p1, std::size_t df, SampleSizeRule rule) {
    const double p0 = 1.0 - p1;
    const double denom = rule == SampleSizeRule::Std ? std::sqrt(p0 * p1) : std::min(p0, p1);
    return s * denom / static_cast<double>(df);
}

struct RuleConstantSummary {
    double class_freq = 0.5;  // frequency of the majority class
    std::size_t df = 2;       // parameters of the largest model
    double median_c_std = 0.0;
    double median_c_epv = 0.0;
    std::size_t cells_used = 0;
    bool fallback = false;  // no cell in the agreement band: nearest cell used
};

inline double median(std::vector<double> v) {
    detail::require(!v.empty(), "median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Median back-solved c per (class frequency, df) over cells whose agreement
/// lies in [lo, hi]; df = conditioning size + 2. When no cell of a group
/// falls in the band, the cells closest to the band centre are used.
inline std::vector<RuleConstantSummary> summarize_rule_constants(std::span<const AgreementCell> cells, double lo = 0.85,
                                                                 double hi = 0.95) {
    std::map<std::pair<double, std::size_t>, std::vector<const AgreementCell*>> groups;
    for (const auto& c : cells) groups[{c.class_freq, c.conditioning + 2}].push_back(&c);
    std::vector<RuleConstantSummary> out;
    for (const auto& [key, members] : groups) {
        RuleConstantSummary r;
        r.class_freq = std::max(key.first, 1.0 - key.first);
        r.df = key.second;
        std::vector<const AgreementCell*> chosen;
        for (auto* c : members)
            if (c->agreement() >= lo && c->agreement() <= hi) chosen.push_back(c);
        if (chosen.empty()) {
            r.fallback = true;
            const double centre = 0.5 * (lo + hi);
            double best = std::numeric_limits<double>::infinity();
            for (auto* c : members) best = std::min(best, std::abs(c->agreement() - centre));
            for (auto* c : members)
                if (std::abs(c->agreement() - centre) == best) chosen.push_back(c);
        }
        std::vector<double> c_std, c_epv;
        for (auto* c : chosen) {
            const double s = static_cast<double>(c->samples_per_subset);
            c_std.push_back(back_solve_c(s, c->class_freq, r.df, SampleSizeRule::Std));
            c_epv.push_back(back_solve_c(s, c->class_freq, r.df, SampleSizeRule::Epv));
        }
        r.median_c_std = median(c_std);
        r.median_c_epv = median(c_epv);
        r.cells_used = chosen.size();
        out.push_back(r);
    }
    return out;
}

/// max/min of the median constants across all groups, per rule.
inline std::pair<double, double> rule_constant_spread(std::span<const RuleConstantSummary> rows) {
    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    double emin = std::numeric_limits<double>::infinity(), emax = 0.0;
    for (const auto& r : rows) {
        smin = std::min(smin, r.median_c_std);
        smax = std::max(smax, r.median_c_std);
        emin = std::min(emin, r.median_c_epv);
        emax = std::max(emax, r.median_c_epv);
    }
    return {smax / smin, emax / emin};
}

// ===========================================================================
// Runtime scaling
// ===========================================================================

struct BenchParams {
    std::size_t n_nodes = 101;  // base feature count + 1
    double connectivity = 3.0;
    std::size_t n_samples = 20000;
    std::size_t max_vars = 10;
    std::size_t max_runs = 1;
    double c_rule = 10.0;
    SampleSizeRule rule = SampleSizeRule::Std;
    std::vector<std::size_t> workers{1, 2};
    std::size_t repeats = 1;  // timed runs per point after one discarded warm-up
    std::size_t networks = 1;  // seconds are summed over this many networks
    std::uint64_t seed = 1;
    BootstrapConfig bootstrap;
};

struct BenchPoint {
    std::string axis;  // "features", "samples" or "workers"
    std::size_t n_features = 0;
    std::size_t n_samples = 0;
    std::size_t workers = 1;
    double seconds = 0.0;   // median over repeats, summed over networks
    double relative = 1.0;  // seconds / seconds of the axis' first point
    std::size_t selected = 0;  // summed over networks
};

inline double time_selection(const Dataset& ds, const BenchParams& p, std::size_t workers, std::size_t* n_selected) {
    PartitionParams pp;
    pp.max_vars = p.max_vars;
    pp.c_rule = p.c_rule;
    pp.rule = p.rule;
    pp.workers = workers;
    pp.seed = p.seed;
    const auto plan = make_partition_plan(ds, pp);
    EngineConfig cfg;
    cfg.bootstrap = p.bootstrap;
    cfg.max_vars = p.max_vars;
    cfg.max_runs = p.max_runs;
    cfg.workers = workers;
    cfg.build_models = false;
    auto once = [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = pfbp(ds, plan, cfg);
        if (n_selected) *n_selected = res.selected.size();
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    once();  // warm-up, discarded
    std::vector<double> times;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, p.repeats); ++r) times.push_back(once());
    return median(times);
}

/// Doubling grids: features (N-1 vs 2N-2), samples (n vs 2n), and the worker
/// list on the base problem. Each network is sampled once with 2N-2 features
/// and 2n rows; the narrow datasets keep the target's Markov blanket plus the
/// lowest-numbered other features, so both feature sizes share the optimal
/// set. Seconds are summed over networks.
inline std::vector<BenchPoint> run_bench(const BenchParams& p) {
    detail::require(p.n_nodes >= 2 && p.networks >= 1 && !p.workers.empty(), "invalid bench parameters");
    const std::size_t narrow_p = p.n_nodes - 1;
    // Slots: features (narrow, wide), samples (n, 2n), then one per worker count.
    std::vector<BenchPoint> out{{"features"}, {"features"}, {"samples"}, {"samples"}};
    for (auto w : p.workers) out.push_back({"workers", 0, 0, w});
    std::vector<std::size_t> rows_n(p.n_samples);
    std::iota(rows_n.begin(), rows_n.end(), std::size_t{0});
    for (std::size_t k = 0; k < p.networks; ++k) {
        const std::uint64_t seed = detail::mix_seed(p.seed, k);
        const auto net = generate_bn(2 * narrow_p + 1, p.connectivity, 1.0, 0.5, seed);
        const auto sample = sample_bn(net, 2 * p.n_samples, detail::mix_seed(seed, 1));
        detail::require(sample.truth.size() <= narrow_p, "Markov blanket larger than the narrow feature set");
        std::vector<std::size_t> keep = sample.truth;
        for (std::size_t j = 0; keep.size() < narrow_p; ++j)
            if (!std::binary_search(sample.truth.begin(), sample.truth.end(), j)) keep.push_back(j);
        std::sort(keep.begin(), keep.end());
        const Dataset narrow_2n = subset_columns(sample.data, keep);
        const Dataset narrow_n = subset_rows(narrow_2n, rows_n);
        const Dataset wide_n = subset_rows(sample.data, rows_n);
        auto time_into = [&](BenchPoint& b, const Dataset& ds, std::size_t workers) {
            std::size_t selected = 0;
            b.seconds += time_selection(ds, p, workers, &selected);
            b.selected += selected;
            b.n_features = ds.n_features();
            b.n_samples = ds.n_samples();
        };
        time_into(out[0], narrow_n, 1);
        time_into(out[1], wide_n, 1);
        time_into(out[2], narrow_n, 1);
        time_into(out[3], narrow_2n, 1);
        for (std::size_t i = 0; i < p.workers.size(); ++i) time_into(out[4 + i], narrow_n, p.workers[i]);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& base = out[i].axis == "features" ? out[0] : out[i].axis == "samples" ? out[2] : out[4];
        out[i].relative = out[i].seconds / base.seconds;
    }
    return out;
}

}  // namespace pfbp
