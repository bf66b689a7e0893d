#pragma once

// Conditional-independence tests for a binary target: logistic regression by
// damped Newton, likelihood-ratio and univariate score tests, and chi-square
// tail probabilities computed directly in log space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfbp/error.hpp"

namespace pfbp {

// ===========================================================================
// Chi-square tails
// ===========================================================================

namespace detail {

inline double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Lower regularized gamma P(a, z) by its power series; valid for z < a + 1.
inline double gamma_p_series(double a, double z) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= z / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::exp(-z + a * std::log(z) - std::lgamma(a)) * sum;
}

// log Q(a, z) through the modified Lentz continued fraction; z >= a + 1.
inline double log_gamma_q_cf(double a, double z) {
    constexpr double tiny = 1e-300;
    double b = z + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return -z + a * std::log(z) - std::lgamma(a) + std::log(h);
}

// log of e^{-z} sum_{i<k} z^i/i!, i.e. log Q(k, z) for integer k, z >= k.
// Factoring out the largest (last) term keeps the sum in range.
inline double log_gamma_q_integer(std::size_t k, double z) {
    double ratio_sum = 1.0;
    double ratio = 1.0;
    for (std::size_t i = k - 1; i >= 1; --i) {
        ratio *= static_cast<double>(i) / z;
        ratio_sum += ratio;
        if (ratio < ratio_sum * 1e-18) break;
    }
    const double km1 = static_cast<double>(k - 1);
    return -z + km1 * std::log(z) - std::lgamma(km1 + 1.0) + std::log(ratio_sum);
}

}  // namespace detail

/// ln P(X >= x) for X ~ chi-square(df), without leaving log space.
inline double chisq_log_sf(double x, std::size_t df) {
    if (df == 0) throw PreconditionError("chi-square df must be positive");
    if (std::isnan(x) || x < 0.0) throw PreconditionError("chi-square statistic must be non-negative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
    const double a = 0.5 * static_cast<double>(df);
    const double z = 0.5 * x;
    if (df == 2) return -z;
    if (z < a + 1.0) return std::log1p(-detail::gamma_p_series(a, z));
    if (df % 2 == 0) return detail::log_gamma_q_integer(df / 2, z);
    return detail::log_gamma_q_cf(a, z);
}

/// Largest x with chisq_log_sf(x, df) >= log_alpha. A statistic t then has
/// ln p >= log_alpha exactly when t <= the returned value.
inline double chisq_isf(double log_alpha, std::size_t df) {
    detail::require(log_alpha <= 0.0, "log_alpha must be <= 0");
    if (log_alpha == 0.0) return 0.0;
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(df));
    while (chisq_log_sf(hi, df) >= log_alpha) {
        lo = hi;
        hi *= 2.0;
    }
    while (true) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (chisq_log_sf(mid, df) >= log_alpha)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

// ===========================================================================
// Logistic regression
// ===========================================================================

struct LogisticOptions {
    int max_iter = 50;
    double grad_tol = 1e-6;  // max-norm of the gradient
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 40;
    double coef_cap = 30.0;  // per-coefficient bound, keeps separated fits finite
    bool record_trace = false;
};

enum class FitMethod { Newton, ConjugateFixedHessian, GradientDescent };

inline const char* to_string(FitMethod m) {
    switch (m) {
    case FitMethod::Newton: return "newton";
    case FitMethod::ConjugateFixedHessian: return "conjugate-fixed-hessian";
    case FitMethod::GradientDescent: return "gradient-descent";
    }
    return "unknown";
}

struct LogisticFit {
    Eigen::VectorXd beta;  // intercept first
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
    FitMethod method_used = FitMethod::Newton;  // most robust method any step needed
    std::vector<double> trace;                  // LL before each step and at the end
};

namespace detail {

inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

inline double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

inline double log_likelihood_eta(const Eigen::VectorXd& eta, std::span<const std::uint8_t> y) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += (y[static_cast<std::size_t>(i)] ? eta[i] : 0.0) - softplus(eta[i]);
    return ll;
}

/// Design matrix [1, X].
inline Eigen::MatrixXd with_intercept(const Eigen::Ref<const Eigen::MatrixXd>& X) {
    Eigen::MatrixXd Z(X.rows(), X.cols() + 1);
    Z.col(0).setOnes();
    Z.rightCols(X.cols()) = X;
    return Z;
}

inline double clamp_coefs(Eigen::VectorXd& beta, double cap) {
    double moved = 0.0;
    for (Eigen::Index k = 0; k < beta.size(); ++k) {
        const double c = std::clamp(beta[k], -cap, cap);
        moved += std::abs(c - beta[k]);
        beta[k] = c;
    }
    return moved;
}

inline double logit_mean(std::span<const std::uint8_t> y) {
    double pos = 0.0;
    for (auto v : y) pos += v;
    const double n = static_cast<double>(y.size());
    const double p = std::clamp(pos / n, 0.5 / n, 1.0 - 0.5 / n);
    return std::log(p / (1.0 - p));
}

// Ascent direction from an SPD system; empty when the factorization is unusable.
inline std::optional<Eigen::VectorXd> spd_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
    const double hmax = H.diagonal().cwiseAbs().maxCoeff();
    if (!diag.allFinite() || diag.cwiseAbs2().minCoeff() <= 1e-12 * std::max(hmax, 1e-300)) return std::nullopt;
    Eigen::VectorXd d = llt.solve(g);
    if (!d.allFinite()) return std::nullopt;
    return d;
}

// Log-likelihood at eta; also stores exp(-|eta_i|) for the sigmoid. The
// compensated sum keeps rounding noise well below the gain of a late Newton
// step, which would otherwise stall the line search on large blocks.
inline double log_likelihood_cached(const Eigen::VectorXd& eta, std::span<const std::uint8_t> y, Eigen::VectorXd& e) {
    double sum = 0.0, comp = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        const double t = eta[i];
        e[i] = std::exp(-std::abs(t));
        const double term = (y[static_cast<std::size_t>(i)] ? t : 0.0) - (std::max(t, 0.0) + std::log1p(e[i]));
        const double next = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - next) + term : (term - next) + sum;
        sum = next;
    }
    return sum + comp;
}

inline LogisticFit fit_design(const Eigen::MatrixXd& Z, std::span<const std::uint8_t> y, Eigen::VectorXd beta,
                              const LogisticOptions& opts) {
    const Eigen::Index n = Z.rows();
    const Eigen::Index d = Z.cols();
    LogisticFit fit;
    fit.method_used = FitMethod::Newton;

    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];

    clamp_coefs(beta, opts.coef_cap);
    Eigen::VectorXd eta = Z * beta;
    Eigen::VectorXd e(n), e_c(n);
    double ll = log_likelihood_cached(eta, y, e);
    Eigen::VectorXd mu(n), w(n), g(d);
    Eigen::MatrixXd Zw(n, d);
    std::optional<Eigen::MatrixXd> fixed_hessian;

    for (int it = 0;; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double inv = 1.0 / (1.0 + e[i]);
            mu[i] = eta[i] >= 0 ? inv : e[i] * inv;
            w[i] = e[i] * inv * inv;
        }
        g.noalias() = Z.transpose() * (yv - mu);
        // Components pinned at the cap with the gradient pushing outward are
        // at a constrained optimum and do not count toward convergence.
        double gnorm = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const bool pinned = (beta[k] >= opts.coef_cap && g[k] > 0) || (beta[k] <= -opts.coef_cap && g[k] < 0);
            if (!pinned) gnorm = std::max(gnorm, std::abs(g[k]));
        }
        if (opts.record_trace) fit.trace.push_back(ll);
        if (gnorm < opts.grad_tol) {
            fit.converged = true;
            break;
        }
        if (it >= opts.max_iter) break;

        bool stepped = false;
        double newton_decrement = std::numeric_limits<double>::infinity();
        for (int m = 0; m < 3 && !stepped; ++m) {
            const auto method = static_cast<FitMethod>(m);
            std::optional<Eigen::VectorXd> dir;
            if (method == FitMethod::Newton) {
                Zw = Z.array().colwise() * w.array();
                Eigen::MatrixXd H = Z.transpose() * Zw;
                dir = spd_solve(H, g);
            } else if (method == FitMethod::ConjugateFixedHessian) {
                // Z'Z/4 bounds the Hessian from above for every beta.
                if (!fixed_hessian) fixed_hessian = Eigen::MatrixXd(0.25 * (Z.transpose() * Z));
                dir = spd_solve(*fixed_hessian, g);
            } else {
                dir = g * (4.0 / static_cast<double>(std::max<Eigen::Index>(n, 1)));
            }
            if (!dir) continue;
            const double slope = g.dot(*dir);
            if (method == FitMethod::Newton) newton_decrement = slope;
            if (!(slope > 0.0)) continue;

            double t = 1.0;
            for (int bt = 0; bt <= opts.max_backtracks; ++bt, t *= opts.backtrack) {
                Eigen::VectorXd cand = beta + t * *dir;
                const double moved = clamp_coefs(cand, opts.coef_cap);
                Eigen::VectorXd eta_c = Z * cand;
                const double ll_c = log_likelihood_cached(eta_c, y, e_c);
                const bool ok = moved > 0.0 ? ll_c > ll : ll_c >= ll + opts.armijo_c1 * t * slope;
                if (ok && std::isfinite(ll_c) && cand != beta) {
                    beta = std::move(cand);
                    eta = std::move(eta_c);
                    e.swap(e_c);
                    ll = ll_c;
                    stepped = true;
                    if (static_cast<int>(method) > static_cast<int>(fit.method_used)) fit.method_used = method;
                    break;
                }
            }
        }
        if (!stepped) {
            // No representable ascent left: the remaining gain is below the
            // resolution of the log-likelihood itself.
            if (newton_decrement < 1e-12 * (1.0 + std::abs(ll))) fit.converged = true;
            break;
        }
        ++fit.iterations;
    }
    fit.beta = std::move(beta);
    fit.log_likelihood = ll;
    return fit;
}

}  // namespace detail

/// Maximum-likelihood logistic regression of y on [1, X].
inline LogisticFit fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const std::uint8_t> y,
                                const LogisticOptions& opts = {},
                                const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw PreconditionError("X rows and y length differ");
    if (y.empty()) throw PreconditionError("cannot fit logistic regression on zero rows");
    Eigen::VectorXd beta0;
    if (warm_start) {
        if (warm_start->size() != X.cols() + 1) throw PreconditionError("warm start has wrong length");
        beta0 = *warm_start;
    } else {
        beta0 = Eigen::VectorXd::Zero(X.cols() + 1);
        beta0[0] = detail::logit_mean(y);
    }
    return detail::fit_design(detail::with_intercept(X), y, std::move(beta0), opts);
}

/// Log-likelihood and its gradient at beta (intercept first).
inline double logistic_log_likelihood(const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const std::uint8_t> y,
                                      const Eigen::VectorXd& beta, Eigen::VectorXd* gradient = nullptr) {
    const Eigen::MatrixXd Z = detail::with_intercept(X);
    const Eigen::VectorXd eta = Z * beta;
    if (gradient) {
        Eigen::VectorXd r(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i)
            r[i] = y[static_cast<std::size_t>(i)] - detail::sigmoid(eta[i]);
        *gradient = Z.transpose() * r;
    }
    return detail::log_likelihood_eta(eta, y);
}

// ===========================================================================
// Tests
// ===========================================================================

struct TestResult {
    double log_p = 0.0;      // natural log of the p-value
    double statistic = 0.0;  // deviance or squared score statistic
    std::size_t df = 1;
    double log_likelihood_full = 0.0;  // LL of the model including the candidate
    bool informative = true;
};

namespace detail {

inline bool both_classes(std::span<const std::uint8_t> y) {
    bool zero = false, one = false;
    for (auto v : y) (v ? one : zero) = true;
    return zero && one;
}

inline TestResult uninformative(double ll_full = 0.0) {
    TestResult r;
    r.informative = false;
    r.log_likelihood_full = ll_full;
    return r;
}

}  // namespace detail

/// Likelihood-ratio test from two nested fits on the same rows.
inline TestResult lrt_from_fits(double ll_null, double ll_full, std::size_t df = 1) {
    TestResult r;
    r.df = df;
    r.statistic = std::max(0.0, 2.0 * (ll_full - ll_null));
    r.log_p = chisq_log_sf(r.statistic, df);
    r.log_likelihood_full = ll_full;
    return r;
}

/// Tests candidate against y given an already fitted null model on `conditioning`.
inline TestResult lrt_given_null(const LogisticFit& null_fit, const Eigen::Ref<const Eigen::MatrixXd>& conditioning,
                                 const Eigen::Ref<const Eigen::VectorXd>& candidate, std::span<const std::uint8_t> y,
                                 const LogisticOptions& opts = {}) {
    if (candidate.size() != conditioning.rows() || static_cast<std::size_t>(candidate.size()) != y.size())
        throw PreconditionError("lrt inputs have mismatched lengths");
    if (y.size() < 2 || !detail::both_classes(y)) return detail::uninformative();
    Eigen::MatrixXd Z(conditioning.rows(), conditioning.cols() + 2);
    Z.col(0).setOnes();
    Z.middleCols(1, conditioning.cols()) = conditioning;
    Z.col(Z.cols() - 1) = candidate;
    Eigen::VectorXd start = Eigen::VectorXd::Zero(Z.cols());
    start.head(null_fit.beta.size()) = null_fit.beta;
    const auto full = detail::fit_design(Z, y, std::move(start), opts);
    return lrt_from_fits(null_fit.log_likelihood, std::max(full.log_likelihood, null_fit.log_likelihood));
}

/// LRT of "candidate independent of y given conditioning" with one degree of freedom.
inline TestResult lrt(const Eigen::Ref<const Eigen::MatrixXd>& conditioning,
                      const Eigen::Ref<const Eigen::VectorXd>& candidate, std::span<const std::uint8_t> y,
                      const LogisticOptions& opts = {}) {
    if (candidate.size() != conditioning.rows() || static_cast<std::size_t>(candidate.size()) != y.size())
        throw PreconditionError("lrt inputs have mismatched lengths");
    if (y.size() < 2 || !detail::both_classes(y)) return detail::uninformative();
    const auto null_fit = fit_logistic(conditioning, y, opts);
    return lrt_given_null(null_fit, conditioning, candidate, y, opts);
}

/// Signed score statistic sum x_j (y_j - ybar) / sqrt(ybar (1-ybar) sum (x_j - xbar)^2).
/// Returns nullopt when x is constant or y has a single class.
inline std::optional<double> score_statistic(std::span<const double> x, std::span<const std::uint8_t> y) {
    if (x.size() != y.size()) throw PreconditionError("score test inputs have mismatched lengths");
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) return std::nullopt;
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xbar += x[i];
        ybar += y[i];
    }
    xbar /= n;
    ybar /= n;
    double num = 0.0, ssx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += x[i] * (y[i] - ybar);
        ssx += (x[i] - xbar) * (x[i] - xbar);
    }
    const double denom2 = ybar * (1.0 - ybar) * ssx;
    if (!(denom2 > 0.0) || ssx <= 1e-300 * n) return std::nullopt;
    return num / std::sqrt(denom2);
}

/// Univariate score (Lagrange multiplier) test; no model fit. The reported
/// full-model likelihood is the quadratic approximation LL0 + z^2/2.
inline TestResult score_test_univariate(std::span<const double> x, std::span<const std::uint8_t> y) {
    const auto z = score_statistic(x, y);
    if (!z) return detail::uninformative();
    const double n = static_cast<double>(y.size());
    double pos = 0.0;
    for (auto v : y) pos += v;
    const double p1 = pos / n;
    const double ll0 = pos * std::log(p1) + (n - pos) * std::log1p(-p1);
    TestResult r;
    r.statistic = *z * *z;
    r.df = 1;
    r.log_p = chisq_log_sf(r.statistic, 1);
    r.log_likelihood_full = ll0 + 0.5 * r.statistic;
    return r;
}

}  // namespace pfbp
