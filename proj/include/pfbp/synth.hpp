#pragma once

// Ground-truthed synthetic data: linear-Gaussian Bayesian networks with a
// thresholded binary target, and additive-phenotype SNP data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Dense>

#include "pfbp/data.hpp"
#include "pfbp/error.hpp"

namespace pfbp {

struct SyntheticData {
    Dataset data;
    std::vector<std::size_t> truth;  // feature ids: Markov blanket or causal SNPs
};

// ===========================================================================
// Bayesian networks
// ===========================================================================

struct BayesNet {
    std::size_t n_nodes = 0;
    std::vector<std::vector<std::size_t>> parents;  // parents[v], all < v
    std::vector<std::vector<double>> coefficients;  // aligned with parents
    double error_sd = 1.0;
    std::size_t target_index = 0;  // zero-based node id of T
    double threshold = 0.0;        // T = 1 when standardized log-odds > threshold
    double connectivity = 0.0;
    double class_freq = 0.5;

    std::size_t edge_count() const {
        std::size_t m = 0;
        for (const auto& p : parents) m += p.size();
        return m;
    }

    std::vector<std::size_t> children(std::size_t v) const {
        std::vector<std::size_t> out;
        for (std::size_t c = v + 1; c < n_nodes; ++c)
            if (std::find(parents[c].begin(), parents[c].end(), v) != parents[c].end()) out.push_back(c);
        return out;
    }

    /// Feature column of a non-target node (the target column is removed).
    std::size_t feature_of(std::size_t node) const {
        detail::require(node != target_index && node < n_nodes, "node has no feature column");
        return node < target_index ? node : node - 1;
    }

    std::size_t node_of(std::size_t feature) const { return feature < target_index ? feature : feature + 1; }

    /// Parents, children and the children's other parents of the target, as node ids.
    std::vector<std::size_t> markov_blanket_nodes() const {
        std::set<std::size_t> mb(parents[target_index].begin(), parents[target_index].end());
        for (auto c : children(target_index)) {
            mb.insert(c);
            for (auto sp : parents[c])
                if (sp != target_index) mb.insert(sp);
        }
        return {mb.begin(), mb.end()};
    }

    /// Markov blanket of the target as sorted feature ids.
    std::vector<std::size_t> markov_blanket() const {
        std::vector<std::size_t> out;
        for (auto v : markov_blanket_nodes()) out.push_back(feature_of(v));
        return out;
    }
};

/// Random DAG over nodes in index order: each pair i < j gets the edge i -> j
/// with probability connectivity / (N - 1). Coefficients are uniform on
/// [-1, -0.1] ∪ [0.1, 1]. P(T = 1) is `class_freq` for standard-normal log-odds.
inline BayesNet generate_bn(std::size_t n_nodes, double connectivity, double error_sd, double class_freq,
                            std::uint64_t seed) {
    detail::require(n_nodes >= 2, "a network needs at least 2 nodes");
    detail::require(connectivity > 0.0 && connectivity < static_cast<double>(n_nodes),
                    "connectivity must lie in (0, n_nodes)");
    detail::require(error_sd > 0.0, "error sd must be positive");
    detail::require(class_freq > 0.0 && class_freq < 1.0, "class frequency must lie in (0,1)");
    BayesNet net;
    net.n_nodes = n_nodes;
    net.error_sd = error_sd;
    net.connectivity = connectivity;
    net.class_freq = class_freq;
    net.target_index = (n_nodes + 1) / 2 - 1;
    net.threshold = boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - class_freq);
    net.parents.resize(n_nodes);
    net.coefficients.resize(n_nodes);

    std::mt19937_64 rng(seed);
    const double p_edge = std::min(1.0, connectivity / static_cast<double>(n_nodes - 1));
    std::bernoulli_distribution edge(p_edge);
    std::uniform_real_distribution<double> magnitude(0.1, 1.0);
    std::bernoulli_distribution negative(0.5);
    for (std::size_t j = 1; j < n_nodes; ++j)
        for (std::size_t i = 0; i < j; ++i)
            if (edge(rng)) {
                net.parents[j].push_back(i);
                const double m = magnitude(rng);
                net.coefficients[j].push_back(negative(rng) ? -m : m);
            }
    return net;
}

/// Samples n rows in topological order. Every node is divided by
/// sqrt(sigma^2 + sum beta^2); descendants of T see it as 0/1.
inline SyntheticData sample_bn(const BayesNet& net, std::size_t n_samples, std::uint64_t seed) {
    detail::require(n_samples >= 1, "need at least one sample");
    const auto n = static_cast<Eigen::Index>(n_samples);
    Eigen::MatrixXd nodes(n, static_cast<Eigen::Index>(net.n_nodes));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, net.error_sd);
    std::vector<std::uint8_t> target(n_samples);

    for (std::size_t v = 0; v < net.n_nodes; ++v) {
        auto col = nodes.col(static_cast<Eigen::Index>(v));
        for (Eigen::Index i = 0; i < n; ++i) col[i] = noise(rng);
        double var = net.error_sd * net.error_sd;
        for (std::size_t k = 0; k < net.parents[v].size(); ++k) {
            col += net.coefficients[v][k] * nodes.col(static_cast<Eigen::Index>(net.parents[v][k]));
            var += net.coefficients[v][k] * net.coefficients[v][k];
        }
        col /= std::sqrt(var);
        if (v == net.target_index) {
            for (Eigen::Index i = 0; i < n; ++i) {
                target[static_cast<std::size_t>(i)] = col[i] > net.threshold ? 1 : 0;
                col[i] = target[static_cast<std::size_t>(i)];
            }
        }
    }

    SyntheticData out;
    out.data.values.resize(n, static_cast<Eigen::Index>(net.n_nodes - 1));
    for (std::size_t v = 0; v < net.n_nodes; ++v) {
        if (v == net.target_index) continue;
        out.data.values.col(static_cast<Eigen::Index>(net.feature_of(v))) = nodes.col(static_cast<Eigen::Index>(v));
        out.data.feature_names.push_back("V" + std::to_string(v));
    }
    out.data.target = std::move(target);
    out.truth = net.markov_blanket();
    return out;
}

// ===========================================================================
// SNP genotypes with an additive binary phenotype
// ===========================================================================

/// Noise variance giving heritability h2 for a genetic effect of variance var_g.
inline double snp_noise_variance(double var_g, double h2) {
    detail::require(h2 > 0.0 && h2 <= 1.0, "heritability must lie in (0,1]");
    return var_g * (1.0 - h2) / h2;
}

/// Genotypes in {0,1,2} ~ Binomial(2, p_j) with p_j ~ U(0.05, 0.95); the
/// phenotype is 1 when sum_j z_j u_j + e > 0 over `m_causal` random SNPs,
/// z_j standardized with the empirical allele frequency and u_j ~ N(0,1).
inline SyntheticData generate_snp(std::size_t n_individuals, std::size_t n_snps, std::size_t m_causal, double h2,
                                  std::uint64_t seed) {
    detail::require(n_individuals >= 2 && n_snps >= 1, "need at least 2 individuals and 1 SNP");
    detail::require(m_causal >= 1 && m_causal <= n_snps, "m_causal must lie in [1, n_snps]");
    detail::require(h2 > 0.0 && h2 < 1.0, "heritability must lie in (0,1)");
    const auto n = static_cast<Eigen::Index>(n_individuals);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> freq(0.05, 0.95);

    SyntheticData out;
    out.data.values.resize(n, static_cast<Eigen::Index>(n_snps));
    for (std::size_t j = 0; j < n_snps; ++j) {
        auto col = out.data.values.col(static_cast<Eigen::Index>(j));
        while (true) {
            std::binomial_distribution<int> allele(2, freq(rng));
            for (Eigen::Index i = 0; i < n; ++i) col[i] = allele(rng);
            if (col.maxCoeff() > col.minCoeff()) break;  // monomorphic: draw again
        }
        out.data.feature_names.push_back("SNP" + std::to_string(j));
    }

    std::vector<std::size_t> ids(n_snps);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(m_causal);
    std::sort(ids.begin(), ids.end());

    std::normal_distribution<double> stdnorm(0.0, 1.0);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    for (auto j : ids) {
        const auto col = out.data.values.col(static_cast<Eigen::Index>(j));
        const double p = col.mean() / 2.0;
        const double mu = 2.0 * p, sd = std::sqrt(2.0 * p * (1.0 - p));
        const double u = stdnorm(rng);
        g += u * ((col.array() - mu) / sd).matrix();
    }
    const double var_g = (g.array() - g.mean()).square().sum() / static_cast<double>(n - 1);
    std::normal_distribution<double> noise(0.0, std::sqrt(snp_noise_variance(var_g, h2)));
    out.data.target.resize(n_individuals);
    for (Eigen::Index i = 0; i < n; ++i) out.data.target[static_cast<std::size_t>(i)] = g[i] + noise(rng) > 0.0 ? 1 : 0;
    out.truth = std::move(ids);
    return out;
}

}  // namespace pfbp
