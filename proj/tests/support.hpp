#pragma once

// Shared generators and independent oracles for the test suites. Nothing
// here calls into the library's numerics; oracles are built from Boost.Math
// or written out longhand so that they can disagree with the code under test.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "pfbp/data.hpp"
#include "pfbp/synth.hpp"

namespace pfbp::testing {

// ============================================================================
// Generators
// ============================================================================

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = z(rng);
    return m;
}

/// Standard-normal features; the target follows a logistic model on the
/// given coefficients (intercept first, one entry per leading feature).
inline Dataset logistic_dataset(std::uint64_t seed, std::size_t n, std::size_t p, const std::vector<double>& beta) {
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.values = random_matrix(rng, n, p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ds.target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double eta = beta.empty() ? 0.0 : beta[0];
        for (std::size_t k = 1; k < beta.size() && k - 1 < p; ++k)
            eta += beta[k] * ds.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1));
        ds.target[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
    }
    return ds;
}

inline std::vector<std::uint8_t> random_labels(std::mt19937_64& rng, std::size_t n, double p1 = 0.5) {
    std::bernoulli_distribution b(p1);
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = b(rng) ? 1 : 0;
    return y;
}

// ============================================================================
// Chi-square oracles
// ============================================================================

/// ln SF via Boost's regularized upper incomplete gamma (fine while SF is
/// representable, i.e. above ~1e-300).
inline double chisq_log_sf_boost(double x, std::size_t df) {
    return std::log(boost::math::gamma_q(0.5 * static_cast<double>(df), 0.5 * x));
}

/// SF by direct numerical integration of the chi-square density over [x, inf).
inline double chisq_sf_quadrature(double x, std::size_t df) {
    const double k = 0.5 * static_cast<double>(df);
    const double log_norm = -k * std::log(2.0) - std::lgamma(k);
    auto density = [&](double t) {
        const double u = x + t;
        return std::exp(log_norm + (k - 1.0) * std::log(u) - 0.5 * u);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(density, 0.0, std::numeric_limits<double>::infinity());
}

// ============================================================================
// Kolmogorov-Smirnov against Uniform(0,1)
// ============================================================================

inline double ks_statistic_uniform(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double lo = static_cast<double>(i) / n, hi = static_cast<double>(i + 1) / n;
        d = std::max({d, hi - u[i], u[i] - lo});
    }
    return d;
}

/// Asymptotic Kolmogorov p-value with Stephens' finite-n correction.
inline double ks_p_value(double d, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

// ============================================================================
// Logistic regression oracles
// ============================================================================

/// Log-likelihood written out term by term (intercept first).
inline double logistic_ll_direct(const Eigen::MatrixXd& X, const std::vector<std::uint8_t>& y,
                                 const Eigen::VectorXd& beta) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double eta = beta[0];
        for (Eigen::Index k = 0; k < X.cols(); ++k) eta += beta[k + 1] * X(i, k);
        const double p = 1.0 / (1.0 + std::exp(-eta));
        ll += y[static_cast<std::size_t>(i)] ? std::log(p) : std::log1p(-p);
    }
    return ll;
}

// ============================================================================
// Markov blanket by brute-force d-separation
// ============================================================================

/// True when a and b are d-separated given z, checked with the moralized
/// ancestral graph criterion.
inline bool d_separated(const std::vector<std::vector<std::size_t>>& parents, std::size_t a, std::size_t b,
                        const std::set<std::size_t>& z) {
    const std::size_t n = parents.size();
    std::vector<bool> anc(n, false);
    std::vector<std::size_t> stack{a, b};
    for (auto v : z) stack.push_back(v);
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        if (anc[v]) continue;
        anc[v] = true;
        for (auto p : parents[v]) stack.push_back(p);
    }
    std::vector<std::set<std::size_t>> adj(n);
    for (std::size_t v = 0; v < n; ++v) {
        if (!anc[v]) continue;
        for (auto p : parents[v]) {
            adj[v].insert(p);
            adj[p].insert(v);
        }
        for (auto p : parents[v])
            for (auto q : parents[v])
                if (p != q) adj[p].insert(q);
    }
    std::vector<bool> seen(n, false);
    stack = {a};
    while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        if (seen[v] || z.count(v)) continue;
        if (v == b) return false;
        seen[v] = true;
        for (auto w : adj[v]) stack.push_back(w);
    }
    return true;
}

/// Smallest set M with target d-separated from every other node given M,
/// found by exhaustive search over subsets (N <= 12 keeps this cheap).
inline std::vector<std::size_t> markov_blanket_brute_force(const std::vector<std::vector<std::size_t>>& parents,
                                                           std::size_t target) {
    const std::size_t n = parents.size();
    std::vector<std::size_t> others;
    for (std::size_t v = 0; v < n; ++v)
        if (v != target) others.push_back(v);
    const std::size_t m = others.size();
    std::vector<std::size_t> best;
    bool found = false;
    for (std::size_t size = 0; size <= m && !found; ++size) {
        for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != size) continue;
            std::set<std::size_t> z;
            for (std::size_t k = 0; k < m; ++k)
                if (mask & (1u << k)) z.insert(others[k]);
            bool ok = true;
            for (auto v : others)
                if (!z.count(v) && !d_separated(parents, target, v, z)) {
                    ok = false;
                    break;
                }
            if (ok) {
                best.assign(z.begin(), z.end());
                found = true;
                break;
            }
        }
    }
    return best;
}

}  // namespace pfbp::testing
