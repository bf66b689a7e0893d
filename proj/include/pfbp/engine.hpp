#pragma once

// PFBP orchestration: runs, forward/backward phases, group-sequential
// evidence accumulation with bootstrap pruning, and a plain forward-backward
// baseline on the whole dataset.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfbp/citest.hpp"
#include "pfbp/data.hpp"
#include "pfbp/error.hpp"
#include "pfbp/heuristics.hpp"
#include "pfbp/meta.hpp"
#include "pfbp/model.hpp"
#include "pfbp/thread_pool.hpp"

namespace pfbp {

enum class Phase { Forward, Backward };

inline const char* to_string(Phase p) { return p == Phase::Forward ? "forward" : "backward"; }

/// Evidence of one finished iteration, handed to EngineConfig::evidence_observer.
struct EvidenceSnapshot {
    std::size_t run = 0;
    Phase phase = Phase::Forward;
    std::size_t iteration = 0;  // global iteration counter
    const EvidenceMatrices* evidence = nullptr;
};

struct EngineConfig {
    BootstrapConfig bootstrap;
    std::size_t max_vars = 10;
    std::size_t max_runs = 2;
    std::size_t workers = 1;
    bool univariate_score_test = true;  // score test instead of LRT while S is empty
    bool adaptive_groups = true;
    bool build_models = true;
    LogisticOptions logistic;
    std::function<void(const EvidenceSnapshot&)> evidence_observer;
    ResampleObserver resample_observer;
};

struct SelectionState {
    std::vector<std::size_t> selected;   // S, in selection order
    std::vector<std::size_t> remaining;  // R, sorted
    std::vector<std::size_t> alive;      // A, sorted
    std::size_t run_index = 1;
    Phase phase = Phase::Forward;
    std::size_t groups_processed = 0;  // in the current iteration
    std::size_t group_stride = 1;      // groups per batch between checkpoints
    std::size_t unchanged_checks = 0;  // consecutive checkpoints without change
    std::size_t checkpoints = 0;       // total checkpoints so far, keys bootstrap seeds
    std::size_t iterations = 0;        // total iterations so far
};

struct IterationTrace {
    std::size_t run = 1;
    Phase phase = Phase::Forward;
    std::optional<std::size_t> candidate;  // best (forward) or worst (backward) alive feature
    double combined_log_p = 0.0;
    bool accepted = false;  // candidate added (forward) or removed (backward)
    std::size_t groups_processed = 0;
    std::size_t remaining_before = 0;
    std::size_t remaining_after = 0;
    std::vector<std::size_t> alive_trajectory;  // |A| after every checkpoint, starting with |A| at entry
    std::size_t dropped = 0;
    std::size_t stopped = 0;
    bool early_return = false;
    std::size_t test_failures = 0;
    std::vector<std::size_t> broadcast;  // selected columns every task conditions on
    std::vector<std::size_t> selected_after;
    std::optional<CombinedModel> model;
    double seconds = 0.0;
};

struct SelectionResult {
    std::vector<std::size_t> selected;
    std::vector<IterationTrace> trace;
    std::size_t runs_executed = 0;
    std::optional<CombinedModel> final_model;
    std::size_t test_failures = 0;

    /// Features in the order forward iterations accepted them.
    std::vector<std::size_t> forward_sequence() const {
        std::vector<std::size_t> out;
        for (const auto& it : trace)
            if (it.phase == Phase::Forward && it.accepted) out.push_back(*it.candidate);
        return out;
    }
};

struct GroupEvidence {
    Eigen::MatrixXd log_p;
    Eigen::MatrixXd log_lik;
    std::size_t failures = 0;
};

namespace detail {

inline Eigen::MatrixXd gather(const Dataset& ds, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const double* src = ds.values.col(static_cast<Eigen::Index>(cols[c])).data();
        double* dst = out.col(static_cast<Eigen::Index>(c)).data();
        for (std::size_t r = 0; r < rows.size(); ++r) dst[r] = src[rows[r]];
    }
    return out;
}

inline Eigen::MatrixXd gather_cols(const Dataset& ds, std::span<const std::size_t> cols) {
    Eigen::MatrixXd out(ds.values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
        out.col(static_cast<Eigen::Index>(c)) = ds.values.col(static_cast<Eigen::Index>(cols[c]));
    return out;
}

inline std::vector<std::uint8_t> gather_target(const Dataset& ds, std::span<const std::size_t> rows) {
    std::vector<std::uint8_t> y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) y[r] = ds.target[rows[r]];
    return y;
}

inline std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

inline bool same_set(std::vector<std::size_t> a, std::vector<std::size_t> b) {
    return sorted(std::move(a)) == sorted(std::move(b));
}

inline Eigen::MatrixXd drop_col(const Eigen::MatrixXd& m, Eigen::Index k) {
    Eigen::MatrixXd out(m.rows(), m.cols() - 1);
    out.leftCols(k) = m.leftCols(k);
    out.rightCols(m.cols() - k - 1) = m.rightCols(m.cols() - k - 1);
    return out;
}

inline Eigen::VectorXd drop_coef(const Eigen::VectorXd& v, Eigen::Index k) {
    Eigen::VectorXd out(v.size() - 1);
    out.head(k) = v.head(k);
    out.tail(v.size() - k - 1) = v.tail(v.size() - k - 1);
    return out;
}

}  // namespace detail

/// Evidence for sample subsets [first, last) and alive features A given S.
/// Forward: one test per (subset, alive feature) of "feature independent of
/// T given S". Backward (A ⊆ S): tests of each member given the others.
/// Rows come out in sample-subset order regardless of scheduling.
inline GroupEvidence process_group(const Dataset& ds, const PartitionPlan& plan, std::size_t first, std::size_t last,
                                   std::span<const std::size_t> S, std::span<const std::size_t> A, Phase phase,
                                   const EngineConfig& cfg, ThreadPool& pool) {
    detail::require(!A.empty(), "process_group needs alive features");
    detail::require(first < last && last <= plan.ns, "sample subset range out of bounds");
    const std::size_t n_rows = last - first;
    GroupEvidence out;
    out.log_p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(A.size()));
    out.log_lik = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(A.size()));
    std::atomic<std::size_t> failures{0};

    if (phase == Phase::Forward) {
        // Tasks are (sample subset, feature subset) cells holding alive features.
        std::vector<std::vector<std::size_t>> cols_by_subset(plan.nf);  // column positions in A
        for (std::size_t c = 0; c < A.size(); ++c) cols_by_subset[plan.feature_assignment[A[c]]].push_back(c);
        std::vector<std::pair<std::size_t, std::size_t>> tasks;
        for (std::size_t i = first; i < last; ++i)
            for (std::size_t j = 0; j < plan.nf; ++j)
                if (!cols_by_subset[j].empty()) tasks.emplace_back(i, j);
        const bool use_score = S.empty() && cfg.univariate_score_test;

        pool.parallel_for(tasks.size(), [&](std::size_t t) {
            const auto [i, j] = tasks[t];
            const auto rows = plan.subset_rows(i);
            const auto y = detail::gather_target(ds, rows);
            const auto row = static_cast<Eigen::Index>(i - first);
            const Eigen::MatrixXd XS = detail::gather(ds, rows, S);
            std::optional<LogisticFit> null_fit;
            double ll_null = 0.0;
            if (!use_score && detail::both_classes(y)) {
                try {
                    null_fit = fit_logistic(XS, y, cfg.logistic);
                    ll_null = null_fit->log_likelihood;
                } catch (const std::exception&) {
                    ++failures;
                }
            }
            Eigen::VectorXd x(static_cast<Eigen::Index>(rows.size()));
            for (auto c : cols_by_subset[j]) {
                const double* src = ds.values.col(static_cast<Eigen::Index>(A[c])).data();
                for (std::size_t r = 0; r < rows.size(); ++r) x[static_cast<Eigen::Index>(r)] = src[rows[r]];
                TestResult res;
                try {
                    if (use_score)
                        res = score_test_univariate(std::span<const double>(x.data(), rows.size()), y);
                    else if (null_fit)
                        res = lrt_given_null(*null_fit, XS, x, y, cfg.logistic);
                    else
                        res = detail::uninformative(ll_null);
                    if (!std::isfinite(res.log_p) || !std::isfinite(res.log_likelihood_full))
                        throw std::runtime_error("non-finite test result");
                } catch (const std::exception&) {
                    ++failures;
                    res = detail::uninformative(ll_null);
                }
                if (!res.informative) res.log_likelihood_full = ll_null;
                out.log_p(row, static_cast<Eigen::Index>(c)) = res.log_p;
                out.log_lik(row, static_cast<Eigen::Index>(c)) = res.log_likelihood_full;
            }
        });
    } else {
        std::vector<Eigen::Index> pos_in_s(A.size());
        for (std::size_t c = 0; c < A.size(); ++c) {
            auto it = std::find(S.begin(), S.end(), A[c]);
            detail::require(it != S.end(), "backward alive feature is not selected");
            pos_in_s[c] = it - S.begin();
        }
        pool.parallel_for(n_rows, [&](std::size_t t) {
            const std::size_t i = first + t;
            const auto rows = plan.subset_rows(i);
            const auto y = detail::gather_target(ds, rows);
            const auto row = static_cast<Eigen::Index>(t);
            if (!detail::both_classes(y)) return;  // zero row: log p = 0 everywhere
            const Eigen::MatrixXd XS = detail::gather(ds, rows, S);
            LogisticFit full;
            try {
                full = fit_logistic(XS, y, cfg.logistic);
            } catch (const std::exception&) {
                failures += A.size();
                return;
            }
            for (std::size_t c = 0; c < A.size(); ++c) {
                TestResult res;
                try {
                    const Eigen::MatrixXd Xr = detail::drop_col(XS, pos_in_s[c]);
                    const auto reduced = fit_logistic(Xr, y, cfg.logistic, detail::drop_coef(full.beta, pos_in_s[c] + 1));
                    res = lrt_from_fits(reduced.log_likelihood, std::max(full.log_likelihood, reduced.log_likelihood));
                    if (!std::isfinite(res.log_p)) throw std::runtime_error("non-finite test result");
                } catch (const std::exception&) {
                    ++failures;
                    res = detail::uninformative(full.log_likelihood);
                }
                out.log_p(row, static_cast<Eigen::Index>(c)) = res.log_p;
                out.log_lik(row, static_cast<Eigen::Index>(c)) = full.log_likelihood;
            }
        });
    }
    out.failures = failures.load();
    return out;
}

/// Stride update after a checkpoint: doubles once A and R have stayed the
/// same over two consecutive checkpoints.
inline void adapt_group_stride(SelectionState& state, std::size_t alive_before, std::size_t alive_after,
                               std::size_t remaining_before, std::size_t remaining_after) {
    if (alive_before == alive_after && remaining_before == remaining_after) {
        if (++state.unchanged_checks >= 2) {
            state.group_stride *= 2;
            state.unchanged_checks = 0;
        }
    } else {
        state.unchanged_checks = 0;
    }
}

/// Averages per-subset logistic fits of T on `features` over subsets [0, last).
inline std::optional<CombinedModel> combined_model_on_subsets(const Dataset& ds, const PartitionPlan& plan,
                                                              std::span<const std::size_t> features, std::size_t last,
                                                              const LogisticOptions& opts, ThreadPool& pool) {
    std::vector<std::optional<Eigen::VectorXd>> betas(last);
    pool.parallel_for(last, [&](std::size_t i) {
        const auto rows = plan.subset_rows(i);
        const auto y = detail::gather_target(ds, rows);
        if (!detail::both_classes(y)) return;
        try {
            auto fit = fit_logistic(detail::gather(ds, rows, features), y, opts);
            if (fit.beta.allFinite()) betas[i] = std::move(fit.beta);
        } catch (const std::exception&) {
        }
    });
    std::vector<Eigen::VectorXd> ok;
    for (auto& b : betas)
        if (b) ok.push_back(std::move(*b));
    if (ok.empty()) return std::nullopt;
    return combine_models(ok, {features.begin(), features.end()});
}

class Engine {
public:
    Engine(const Dataset& ds, const PartitionPlan& plan, EngineConfig cfg)
        : ds_(ds), plan_(plan), cfg_(std::move(cfg)), pool_(cfg_.workers) {
        if (cfg_.max_vars < 1) throw PreconditionError("max_vars must be at least 1");
        if (cfg_.max_runs < 1) throw PreconditionError("max_runs must be at least 1");
        if (plan.n_samples != ds.n_samples() || plan.n_features != ds.n_features())
            throw PreconditionError("partition plan does not match the dataset");
        if (!ds.has_both_classes()) throw PreconditionError("selection requires both target classes");
        cfg_.bootstrap.validate();
    }

    const EngineConfig& config() const { return cfg_; }

    SelectionResult run() {
        SelectionResult result;
        SelectionState state;
        std::vector<std::size_t> before;
        bool changed = true;
        while (state.run_index <= cfg_.max_runs && changed) {
            before = state.selected;
            one_run(state, result);
            ++result.runs_executed;
            changed = !detail::same_set(before, state.selected);
            ++state.run_index;
        }
        result.selected = state.selected;
        // An empty selection still gets its intercept-only model.
        if (cfg_.build_models)
            result.final_model = combined_model_on_subsets(ds_, plan_, state.selected, plan_.ns, cfg_.logistic, pool_);
        for (const auto& it : result.trace) result.test_failures += it.test_failures;
        return result;
    }

    void one_run(SelectionState& state, SelectionResult& result) {
        state.remaining.clear();
        for (std::size_t f = 0; f < ds_.n_features(); ++f)
            if (std::find(state.selected.begin(), state.selected.end(), f) == state.selected.end())
                state.remaining.push_back(f);
        bool changed = true;
        while (state.selected.size() < cfg_.max_vars && changed) {
            state.phase = Phase::Forward;
            result.trace.push_back(forward_iteration(state));
            changed = result.trace.back().accepted;
        }
        changed = true;
        while (changed && !state.selected.empty()) {
            state.phase = Phase::Backward;
            result.trace.push_back(backward_iteration(state));
            changed = result.trace.back().accepted;
        }
    }

    IterationTrace forward_iteration(SelectionState& state) {
        detail::require(state.phase == Phase::Forward, "forward iteration in backward phase");
        const auto t0 = std::chrono::steady_clock::now();
        IterationTrace tr;
        tr.run = state.run_index;
        tr.phase = Phase::Forward;
        tr.remaining_before = state.remaining.size();
        tr.broadcast = state.selected;
        state.alive = state.remaining;
        state.group_stride = 1;
        state.unchanged_checks = 0;
        state.groups_processed = 0;
        tr.alive_trajectory.push_back(state.alive.size());

        EvidenceMatrices ev = EvidenceMatrices::empty(state.alive);
        while (!state.alive.empty() && state.groups_processed < plan_.Q) {
            const std::size_t q_end = std::min(plan_.Q, state.groups_processed + state.group_stride);
            const std::size_t first = state.groups_processed * plan_.C;
            const std::size_t last = std::min(q_end * plan_.C, plan_.ns);
            auto g = process_group(ds_, plan_, first, last, state.selected, state.alive, Phase::Forward, cfg_, pool_);
            tr.test_failures += g.failures;
            append_group(ev, g.log_p, g.log_lik, state.alive);
            state.groups_processed = q_end;

            const std::size_t a_before = state.alive.size(), r_before = state.remaining.size();
            auto boot = cfg_.bootstrap;
            boot.seed = detail::mix_seed(cfg_.bootstrap.seed, state.checkpoints++);
            const auto outcome = forward_checkpoint(ev, state.remaining, state.alive, boot, cfg_.resample_observer);
            state.remaining = outcome.remaining;
            state.alive = outcome.alive;
            tr.dropped += outcome.dropped.size();
            tr.stopped += outcome.stopped.size();
            tr.early_return = tr.early_return || outcome.returned;
            retain_columns(ev, state.alive);
            tr.alive_trajectory.push_back(state.alive.size());
            if (state.alive.size() <= 1) break;
            if (cfg_.adaptive_groups)
                adapt_group_stride(state, a_before, state.alive.size(), r_before, state.remaining.size());
        }
        tr.groups_processed = state.groups_processed;

        if (!state.alive.empty()) {
            const auto combined = combine_columns(ev);
            const std::size_t best = best_feature(ev, state.alive);
            tr.candidate = best;
            tr.combined_log_p = combined[static_cast<std::size_t>(ev.column_of(best))];
            if (tr.combined_log_p <= std::log(cfg_.bootstrap.alpha)) {
                tr.accepted = true;
                state.selected.push_back(best);
                state.remaining.erase(std::find(state.remaining.begin(), state.remaining.end(), best));
                if (cfg_.build_models) {
                    const std::size_t last = std::min(state.groups_processed * plan_.C, plan_.ns);
                    tr.model = combined_model_on_subsets(ds_, plan_, state.selected, last, cfg_.logistic, pool_);
                }
            }
        }
        notify(state, ev);
        tr.remaining_after = state.remaining.size();
        tr.selected_after = state.selected;
        tr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ++state.iterations;
        return tr;
    }

    IterationTrace backward_iteration(SelectionState& state) {
        detail::require(state.phase == Phase::Backward, "backward iteration in forward phase");
        const auto t0 = std::chrono::steady_clock::now();
        IterationTrace tr;
        tr.run = state.run_index;
        tr.phase = Phase::Backward;
        tr.remaining_before = tr.remaining_after = state.remaining.size();
        tr.broadcast = state.selected;
        tr.selected_after = state.selected;
        if (state.selected.empty()) return tr;

        state.alive = detail::sorted(state.selected);
        state.group_stride = 1;
        state.unchanged_checks = 0;
        state.groups_processed = 0;
        tr.alive_trajectory.push_back(state.alive.size());

        EvidenceMatrices ev = EvidenceMatrices::empty(state.alive);
        while (state.groups_processed < plan_.Q) {
            const std::size_t q_end = std::min(plan_.Q, state.groups_processed + state.group_stride);
            const std::size_t first = state.groups_processed * plan_.C;
            const std::size_t last = std::min(q_end * plan_.C, plan_.ns);
            auto g = process_group(ds_, plan_, first, last, state.selected, state.alive, Phase::Backward, cfg_, pool_);
            tr.test_failures += g.failures;
            append_group(ev, g.log_p, g.log_lik, state.alive);
            state.groups_processed = q_end;

            const std::size_t a_before = state.alive.size();
            if (state.alive.size() >= 2 && cfg_.bootstrap.stop_enabled()) {
                auto boot = cfg_.bootstrap;
                boot.seed = detail::mix_seed(cfg_.bootstrap.seed, state.checkpoints++);
                const auto kept = early_stopping_backward(ev, state.alive, boot, cfg_.resample_observer);
                tr.stopped += state.alive.size() - kept.size();
                state.alive = kept;
                retain_columns(ev, state.alive);
            }
            tr.alive_trajectory.push_back(state.alive.size());
            if (state.alive.size() <= 1) break;
            if (cfg_.adaptive_groups)
                adapt_group_stride(state, a_before, state.alive.size(), state.remaining.size(), state.remaining.size());
        }
        tr.groups_processed = state.groups_processed;

        const auto combined = combine_columns(ev);
        const std::size_t worst = worst_feature(ev, state.alive);
        tr.candidate = worst;
        tr.combined_log_p = combined[static_cast<std::size_t>(ev.column_of(worst))];
        if (tr.combined_log_p > std::log(cfg_.bootstrap.alpha)) {
            tr.accepted = true;
            state.selected.erase(std::find(state.selected.begin(), state.selected.end(), worst));
        }
        notify(state, ev);
        tr.selected_after = state.selected;
        tr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ++state.iterations;
        return tr;
    }

private:
    void notify(const SelectionState& state, const EvidenceMatrices& ev) const {
        if (!cfg_.evidence_observer) return;
        EvidenceSnapshot snap;
        snap.run = state.run_index;
        snap.phase = state.phase;
        snap.iteration = state.iterations;
        snap.evidence = &ev;
        cfg_.evidence_observer(snap);
    }

    const Dataset& ds_;
    const PartitionPlan& plan_;
    EngineConfig cfg_;
    ThreadPool pool_;
};

/// Full PFBP selection: up to cfg.max_runs runs of forward then backward phases.
inline SelectionResult pfbp(const Dataset& ds, const PartitionPlan& plan, const EngineConfig& cfg) {
    Engine engine(ds, plan, cfg);
    return engine.run();
}

inline IterationTrace forward_iteration(const Dataset& ds, const PartitionPlan& plan, SelectionState& state,
                                        const EngineConfig& cfg) {
    Engine engine(ds, plan, cfg);
    state.phase = Phase::Forward;
    return engine.forward_iteration(state);
}

inline IterationTrace backward_iteration(const Dataset& ds, const PartitionPlan& plan, SelectionState& state,
                                         const EngineConfig& cfg) {
    Engine engine(ds, plan, cfg);
    state.phase = Phase::Backward;
    return engine.backward_iteration(state);
}

// ===========================================================================
// Forward-backward selection on the whole dataset
// ===========================================================================

struct FbsResult {
    std::vector<std::size_t> selected;
    std::vector<std::size_t> forward_sequence;
    std::vector<std::size_t> removed;  // in removal order
};

/// Textbook forward-backward selection with likelihood-ratio tests on all rows.
inline FbsResult fbs_baseline(const Dataset& ds, double alpha, std::size_t max_vars,
                              const LogisticOptions& opts = {}) {
    detail::require(max_vars >= 1, "max_vars must be at least 1");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    const double log_alpha = std::log(alpha);
    FbsResult out;
    std::vector<std::size_t> S;
    std::vector<std::size_t> R(ds.n_features());
    std::iota(R.begin(), R.end(), std::size_t{0});

    while (S.size() < max_vars && !R.empty()) {
        const Eigen::MatrixXd XS = detail::gather_cols(ds, S);
        const auto null_fit = fit_logistic(XS, ds.target, opts);
        std::size_t best = R.front();
        double best_lp = std::numeric_limits<double>::infinity();
        for (auto f : R) {
            const auto r = lrt_given_null(null_fit, XS, ds.values.col(static_cast<Eigen::Index>(f)), ds.target, opts);
            if (r.log_p < best_lp) {
                best_lp = r.log_p;
                best = f;
            }
        }
        if (!(best_lp <= log_alpha)) break;
        S.push_back(best);
        out.forward_sequence.push_back(best);
        R.erase(std::find(R.begin(), R.end(), best));
    }

    while (!S.empty()) {
        const Eigen::MatrixXd XS = detail::gather_cols(ds, S);
        const auto full = fit_logistic(XS, ds.target, opts);
        std::size_t worst = 0;
        double worst_lp = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < S.size(); ++k) {
            const auto reduced = fit_logistic(detail::drop_col(XS, static_cast<Eigen::Index>(k)), ds.target, opts,
                                              detail::drop_coef(full.beta, static_cast<Eigen::Index>(k + 1)));
            const auto r =
                lrt_from_fits(reduced.log_likelihood, std::max(full.log_likelihood, reduced.log_likelihood));
            if (r.log_p > worst_lp || (r.log_p == worst_lp && S[k] < S[worst])) {
                worst_lp = r.log_p;
                worst = k;
            }
        }
        if (!(worst_lp > log_alpha)) break;
        out.removed.push_back(S[worst]);
        S.erase(S.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    out.selected = S;
    return out;
}

}  // namespace pfbp
