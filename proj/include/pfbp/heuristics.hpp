#pragma once

// Bootstrap early-decision rules over the evidence matrices: Early Dropping,
// Early Stopping (forward and backward), and Early Return.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfbp/citest.hpp"
#include "pfbp/error.hpp"
#include "pfbp/meta.hpp"

namespace pfbp {

struct BootstrapConfig {
    std::size_t B = 1000;
    double p_drop = 0.99;
    double p_stop = 0.99;
    double p_return = 0.95;
    double log_tol = std::log(0.9);
    double alpha = 0.01;
    std::uint64_t seed = 0;

    /// Thresholds above 1 can never be reached, which switches a rule off.
    static BootstrapConfig disabled(double alpha = 0.01) {
        BootstrapConfig c;
        c.p_drop = c.p_stop = c.p_return = 2.0;
        c.alpha = alpha;
        return c;
    }

    bool drop_enabled() const { return p_drop <= 1.0; }
    bool stop_enabled() const { return p_stop <= 1.0; }
    bool return_enabled() const { return p_return <= 1.0; }

    void validate() const {
        if (B < 1) throw ConfigError("bootstrap-b must be at least 1");
        for (double p : {p_drop, p_stop, p_return})
            if (!(p > 0.0)) throw ConfigError("bootstrap probability thresholds must be positive");
        if (!(log_tol <= 0.0)) throw ConfigError("er-tol must lie in (0,1] (its log must be <= 0)");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Smallest count c (original sample included) with c / (B+1) >= p.
inline std::size_t required_count(double p, std::size_t B) {
    const double need = std::ceil(p * static_cast<double>(B + 1) - 1e-9);
    return static_cast<std::size_t>(std::max(0.0, need));
}

}  // namespace detail

/// Row multiplicities of B bootstrap resamples of K rows. Resample b is drawn
/// from its own stream keyed by (seed, b), so the draws do not depend on how
/// many resamples exist or on evaluation order.
struct BootstrapResamples {
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMatrix counts;  // B x K

    BootstrapResamples(std::size_t B, std::size_t K, std::uint64_t seed) : counts(RowMatrix::Zero(
                                                                               static_cast<Eigen::Index>(B),
                                                                               static_cast<Eigen::Index>(K))) {
        for (std::size_t b = 0; b < B; ++b) {
            std::mt19937_64 rng(detail::mix_seed(seed, b));
            std::uniform_int_distribution<std::size_t> pick(0, K - 1);
            for (std::size_t k = 0; k < K; ++k) counts(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(pick(rng))) += 1.0;
        }
    }

    std::size_t B() const { return static_cast<std::size_t>(counts.rows()); }
    std::size_t K() const { return static_cast<std::size_t>(counts.cols()); }

    /// Resampled column sum for resample b.
    double weighted_sum(std::size_t b, const Eigen::Ref<const Eigen::VectorXd>& col) const {
        return counts.row(static_cast<Eigen::Index>(b)).dot(col.transpose());
    }
};

/// Receives the resamples used by each rule invocation (testing hook).
using ResampleObserver = std::function<void(const char* rule, const BootstrapResamples&)>;

namespace detail {

inline std::vector<std::size_t> set_difference(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    std::vector<std::size_t> out;
    for (auto x : a)
        if (std::find(b.begin(), b.end(), x) == b.end()) out.push_back(x);
    return out;
}

/// Counts resamples satisfying `indicator(b)` on top of `original`, stopping
/// as soon as reaching `need` is certain or impossible.
template <class Indicator>
bool probability_at_least(bool original, std::size_t need, std::size_t B, Indicator indicator) {
    std::size_t cnt = original ? 1 : 0;
    if (cnt >= need) return true;
    for (std::size_t b = 0; b < B; ++b) {
        if (cnt + (B - b) < need) return false;
        if (indicator(b)) ++cnt;
        if (cnt >= need) return true;
    }
    return cnt >= need;
}

inline Eigen::VectorXd column(const Eigen::MatrixXd& m, std::ptrdiff_t c) { return m.col(static_cast<Eigen::Index>(c)); }

/// Index into `alive` of the feature with the largest Fisher statistic
/// (smallest combined p); ties go to the lowest feature id.
inline std::size_t best_alive(const EvidenceMatrices& ev, std::span<const std::size_t> alive, const Eigen::VectorXd& stats,
                              bool want_max) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < alive.size(); ++a) {
        const double s = stats[ev.column_of(alive[a])];
        const double sb = stats[ev.column_of(alive[best])];
        const bool better = want_max ? s > sb : s < sb;
        if (better || (s == sb && alive[a] < alive[best])) best = a;
    }
    return best;
}

inline void require_columns(const EvidenceMatrices& ev, std::span<const std::size_t> alive) {
    if (ev.rows_filled() == 0) throw PreconditionError("heuristics need at least one evidence row");
    for (auto id : alive)
        if (ev.column_of(id) < 0) throw PreconditionError("alive feature has no evidence column");
}

}  // namespace detail

/// Feature with the smallest combined p-value among `alive`.
inline std::size_t best_feature(const EvidenceMatrices& ev, std::span<const std::size_t> alive) {
    detail::require(!alive.empty(), "no alive features");
    detail::require_columns(ev, alive);
    const Eigen::VectorXd stats = fisher_statistics(ev);
    return alive[detail::best_alive(ev, alive, stats, true)];
}

/// Feature with the largest combined p-value among `alive`.
inline std::size_t worst_feature(const EvidenceMatrices& ev, std::span<const std::size_t> alive) {
    detail::require(!alive.empty(), "no alive features");
    detail::require_columns(ev, alive);
    const Eigen::VectorXd stats = fisher_statistics(ev);
    return alive[detail::best_alive(ev, alive, stats, false)];
}

// ===========================================================================
// Individual rules on precomputed resamples
// ===========================================================================

/// Features of `alive` whose combined p-value is >= alpha with probability
/// at least p_drop. The test compares Fisher statistics with the chi-square
/// critical value, which decides p >= alpha without evaluating tails.
inline std::vector<std::size_t> early_dropping_decide(const EvidenceMatrices& ev, std::span<const std::size_t> alive,
                                                      const BootstrapConfig& cfg, const BootstrapResamples& rs) {
    std::vector<std::size_t> dropped;
    if (!cfg.drop_enabled() || alive.empty()) return dropped;
    const std::size_t need = detail::required_count(cfg.p_drop, rs.B());
    if (need > rs.B() + 1) return dropped;
    const double crit = chisq_isf(std::log(cfg.alpha), 2 * ev.rows_filled());
    for (auto id : alive) {
        const Eigen::VectorXd col = detail::column(ev.log_p, ev.column_of(id));
        const bool orig = -2.0 * col.sum() <= crit;
        if (detail::probability_at_least(orig, need, rs.B(),
                                         [&](std::size_t b) { return -2.0 * rs.weighted_sum(b, col) <= crit; }))
            dropped.push_back(id);
    }
    return dropped;
}

/// Features that are worse than the current best with probability >= p_stop
/// (forward), or better than the current worst (backward).
inline std::vector<std::size_t> early_stopping_decide(const EvidenceMatrices& ev, std::span<const std::size_t> alive,
                                                      const BootstrapConfig& cfg, const BootstrapResamples& rs,
                                                      bool backward) {
    std::vector<std::size_t> stopped;
    if (!cfg.stop_enabled() || alive.size() < 2) return stopped;
    const std::size_t need = detail::required_count(cfg.p_stop, rs.B());
    if (need > rs.B() + 1) return stopped;
    const Eigen::VectorXd stats = fisher_statistics(ev);
    const std::size_t ref = alive[detail::best_alive(ev, alive, stats, !backward)];
    const Eigen::VectorXd ref_col = detail::column(ev.log_p, ev.column_of(ref));
    std::vector<double> ref_boot(rs.B());
    for (std::size_t b = 0; b < rs.B(); ++b) ref_boot[b] = -2.0 * rs.weighted_sum(b, ref_col);
    const double ref_orig = -2.0 * ref_col.sum();
    for (auto id : alive) {
        if (id == ref) continue;
        const Eigen::VectorXd col = detail::column(ev.log_p, ev.column_of(id));
        // Forward: pi_j > pi_best  <=>  stat_j < stat_best (same df).
        // Backward: pi_j < pi_worst <=>  stat_j > stat_worst.
        auto holds = [&](double sj, double sref) { return backward ? sj > sref : sj < sref; };
        const bool orig = holds(-2.0 * col.sum(), ref_orig);
        if (detail::probability_at_least(orig, need, rs.B(), [&](std::size_t b) {
                return holds(-2.0 * rs.weighted_sum(b, col), ref_boot[b]);
            }))
            stopped.push_back(id);
    }
    return stopped;
}

/// True when the best feature's log-likelihood is within ln t of, or above,
/// every alive feature's with probability >= p_return.
inline bool early_return_decide(const EvidenceMatrices& ev, std::span<const std::size_t> alive, std::size_t best,
                                const BootstrapConfig& cfg, const BootstrapResamples& rs) {
    if (!cfg.return_enabled() || alive.size() < 2) return false;
    const std::size_t need = detail::required_count(cfg.p_return, rs.B());
    if (need > rs.B() + 1) return false;
    const Eigen::VectorXd best_col = detail::column(ev.log_lik, ev.column_of(best));
    std::vector<double> best_boot(rs.B());
    for (std::size_t b = 0; b < rs.B(); ++b) best_boot[b] = rs.weighted_sum(b, best_col);
    const double best_orig = best_col.sum();
    for (auto id : alive) {
        if (id == best) continue;
        const Eigen::VectorXd col = detail::column(ev.log_lik, ev.column_of(id));
        const bool orig = best_orig - col.sum() >= cfg.log_tol;
        if (!detail::probability_at_least(orig, need, rs.B(), [&](std::size_t b) {
                return best_boot[b] - rs.weighted_sum(b, col) >= cfg.log_tol;
            }))
            return false;
    }
    return true;
}

// ===========================================================================
// Set-level operations
// ===========================================================================

struct RemainingAlive {
    std::vector<std::size_t> remaining;
    std::vector<std::size_t> alive;
};

inline RemainingAlive early_dropping(const EvidenceMatrices& ev, std::span<const std::size_t> R,
                                     std::span<const std::size_t> A, const BootstrapConfig& cfg,
                                     const ResampleObserver& observer = {}) {
    RemainingAlive out{{R.begin(), R.end()}, {A.begin(), A.end()}};
    if (A.empty()) return out;
    detail::require_columns(ev, A);
    const BootstrapResamples rs(cfg.B, ev.rows_filled(), cfg.seed);
    if (observer) observer("early_dropping", rs);
    const auto dropped = early_dropping_decide(ev, A, cfg, rs);
    out.remaining = detail::set_difference(R, dropped);
    out.alive = detail::set_difference(A, dropped);
    return out;
}

inline std::vector<std::size_t> early_stopping(const EvidenceMatrices& ev, std::span<const std::size_t> A,
                                               const BootstrapConfig& cfg, const ResampleObserver& observer = {}) {
    detail::require(!A.empty(), "early stopping needs a non-empty alive set");
    detail::require_columns(ev, A);
    const BootstrapResamples rs(cfg.B, ev.rows_filled(), cfg.seed);
    if (observer) observer("early_stopping", rs);
    return detail::set_difference(A, early_stopping_decide(ev, A, cfg, rs, false));
}

inline std::vector<std::size_t> early_stopping_backward(const EvidenceMatrices& ev, std::span<const std::size_t> A,
                                                        const BootstrapConfig& cfg,
                                                        const ResampleObserver& observer = {}) {
    detail::require(!A.empty(), "early stopping needs a non-empty alive set");
    detail::require_columns(ev, A);
    const BootstrapResamples rs(cfg.B, ev.rows_filled(), cfg.seed);
    if (observer) observer("early_stopping_backward", rs);
    return detail::set_difference(A, early_stopping_decide(ev, A, cfg, rs, true));
}

inline std::vector<std::size_t> early_return(const EvidenceMatrices& ev, std::span<const std::size_t> A,
                                             const BootstrapConfig& cfg, const ResampleObserver& observer = {}) {
    detail::require(!A.empty(), "early return needs a non-empty alive set");
    detail::require_columns(ev, A);
    const std::size_t best = best_feature(ev, A);
    if (A.size() == 1) return {best};
    const BootstrapResamples rs(cfg.B, ev.rows_filled(), cfg.seed);
    if (observer) observer("early_return", rs);
    if (early_return_decide(ev, A, best, cfg, rs)) return {best};
    return {A.begin(), A.end()};
}

struct HeuristicOutcome {
    std::vector<std::size_t> remaining;
    std::vector<std::size_t> alive;
    std::vector<std::size_t> dropped;
    std::vector<std::size_t> stopped;
    bool returned = false;
};

/// One forward checkpoint: ED, then ES, then ER, all on one set of resamples.
inline HeuristicOutcome forward_checkpoint(const EvidenceMatrices& ev, std::span<const std::size_t> R,
                                           std::span<const std::size_t> A, const BootstrapConfig& cfg,
                                           const ResampleObserver& observer = {}) {
    HeuristicOutcome out{{R.begin(), R.end()}, {A.begin(), A.end()}, {}, {}, false};
    if (A.empty() || !(cfg.drop_enabled() || cfg.stop_enabled() || cfg.return_enabled())) return out;
    detail::require_columns(ev, A);
    const BootstrapResamples rs(cfg.B, ev.rows_filled(), cfg.seed);
    if (observer) observer("forward_checkpoint", rs);

    out.dropped = early_dropping_decide(ev, out.alive, cfg, rs);
    out.remaining = detail::set_difference(out.remaining, out.dropped);
    out.alive = detail::set_difference(out.alive, out.dropped);
    if (out.alive.empty()) return out;

    out.stopped = early_stopping_decide(ev, out.alive, cfg, rs, false);
    out.alive = detail::set_difference(out.alive, out.stopped);

    if (out.alive.size() >= 2) {
        const std::size_t best = best_feature(ev, out.alive);
        if (early_return_decide(ev, out.alive, best, cfg, rs)) {
            out.returned = true;
            out.alive = {best};
        }
    }
    return out;
}

}  // namespace pfbp
