#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "pfbp/synth.hpp"
#include "support.hpp"

using namespace pfbp;

// ============================================================================
// Network generation
// ============================================================================

TEST(GenerateBn, BalancedClassesGiveZeroThreshold) {
    EXPECT_EQ(generate_bn(10, 2.0, 1.0, 0.5, 1).threshold, 0.0);
    EXPECT_NEAR(generate_bn(10, 2.0, 1.0, 0.9, 1).threshold, -1.2815515655446004, 1e-12);
}

TEST(GenerateBn, TargetSitsAtMiddleNode) {
    EXPECT_EQ(generate_bn(101, 3.0, 1.0, 0.5, 1).target_index, 50u);  // node 51 counting from 1
    EXPECT_EQ(generate_bn(100, 3.0, 1.0, 0.5, 1).target_index, 49u);
    EXPECT_EQ(generate_bn(2, 1.0, 1.0, 0.5, 1).target_index, 0u);
}

TEST(GenerateBn, EdgeRateMatchesConnectivity) {
    // N=101, C=10: each of the 5050 pairs gets an edge with probability 0.1.
    double mean_degree = 0.0;
    const int nets = 40;
    for (int k = 0; k < nets; ++k) {
        const auto net = generate_bn(101, 10.0, 1.0, 0.5, 500 + static_cast<std::uint64_t>(k));
        mean_degree += 2.0 * static_cast<double>(net.edge_count()) / 101.0;
    }
    mean_degree /= nets;
    // Degree sd per net is about sqrt(5050 * 0.09) * 2 / 101 = 0.42, so 40 nets give sd 0.07.
    EXPECT_NEAR(mean_degree, 10.0, 0.3);
}

TEST(GenerateBn, DomainViolationsAreRejected) {
    EXPECT_THROW(generate_bn(10, 0.0, 1.0, 0.5, 1), PreconditionError);
    EXPECT_THROW(generate_bn(10, 10.0, 1.0, 0.5, 1), PreconditionError);
    EXPECT_THROW(generate_bn(1, 0.5, 1.0, 0.5, 1), PreconditionError);
    EXPECT_THROW(generate_bn(10, 2.0, 1.0, 0.0, 1), PreconditionError);
    EXPECT_THROW(generate_bn(10, 2.0, 0.0, 0.5, 1), PreconditionError);
}

TEST(GenerateBn, DagOrderCoefficientRangeAndDeterminism) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto net = generate_bn(40, 4.0, 1.0, 0.5, seed);
        const auto again = generate_bn(40, 4.0, 1.0, 0.5, seed);
        EXPECT_EQ(net.parents, again.parents);
        EXPECT_EQ(net.coefficients, again.coefficients);
        for (std::size_t v = 0; v < net.n_nodes; ++v) {
            ASSERT_EQ(net.parents[v].size(), net.coefficients[v].size());
            for (std::size_t k = 0; k < net.parents[v].size(); ++k) {
                EXPECT_LT(net.parents[v][k], v);
                const double a = std::abs(net.coefficients[v][k]);
                EXPECT_GE(a, 0.1);
                EXPECT_LE(a, 1.0);
            }
        }
    }
}

TEST(GenerateBn, MarkovBlanketMatchesDSeparationBruteForce) {
    int nonempty = 0;
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
        const std::size_t n = 4 + seed % 9;  // 4..12 nodes
        const double c = 1.0 + static_cast<double>(seed % 3);
        const auto net = generate_bn(n, std::min(c, static_cast<double>(n) - 1.0), 1.0, 0.5, seed);
        const auto oracle = pfbp::testing::markov_blanket_brute_force(net.parents, net.target_index);
        ASSERT_EQ(net.markov_blanket_nodes(), oracle) << "seed " << seed;
        nonempty += !oracle.empty();
    }
    EXPECT_GT(nonempty, 100);
}

// ============================================================================
// Sampling
// ============================================================================

TEST(SampleBn, RootNodesHaveUnitVariance) {
    const auto net = generate_bn(30, 3.0, 1.0, 0.5, 7);
    const auto d = sample_bn(net, 100000, 8);
    int roots = 0;
    for (std::size_t v = 0; v < net.n_nodes; ++v) {
        if (v == net.target_index || !net.parents[v].empty()) continue;
        const auto col = d.data.values.col(static_cast<Eigen::Index>(net.feature_of(v)));
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / (static_cast<double>(col.size()) - 1.0);
        EXPECT_NEAR(var, 1.0, 0.05);
        ++roots;
    }
    EXPECT_GT(roots, 0);
}

TEST(SampleBn, ClassFrequencyTracksRequested) {
    for (double p0 : {0.5, 0.7, 0.9}) {
        const auto net = generate_bn(30, 3.0, 1.0, p0, 9);
        const auto d = sample_bn(net, 100000, 10);
        EXPECT_NEAR(d.data.class_frequency(), p0, 0.02) << p0;
    }
}

TEST(SampleBn, TruthIsTheGraphMarkovBlanket) {
    const auto net = generate_bn(30, 3.0, 1.0, 0.5, 11);
    const auto d = sample_bn(net, 100, 12);
    EXPECT_EQ(d.truth, net.markov_blanket());
    EXPECT_EQ(d.data.n_features(), 29u);
    EXPECT_NO_THROW(d.data.validate(true));
}

namespace {

Eigen::VectorXd residual_on(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y) {
    Eigen::MatrixXd design(Z.rows(), Z.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(Z.cols()) = Z;
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
    return y - design * coef;
}

}  // namespace

TEST(SampleBn, NonBlanketNodesAreScreenedOffByTheBlanket) {
    int checked = 0;
    for (std::uint64_t seed = 20; seed < 26; ++seed) {
        const auto net = generate_bn(30, 3.0, 1.0, 0.5, seed);
        const auto d = sample_bn(net, 100000, seed + 100);
        const auto mb = net.markov_blanket();
        if (mb.empty()) continue;
        // Descendants of T are excluded: the proxy only speaks for non-descendants.
        std::set<std::size_t> desc;
        std::vector<std::size_t> stack{net.target_index};
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            for (auto c : net.children(v))
                if (desc.insert(c).second) stack.push_back(c);
        }
        Eigen::MatrixXd Z(d.data.values.rows(), static_cast<Eigen::Index>(mb.size()));
        for (std::size_t k = 0; k < mb.size(); ++k)
            Z.col(static_cast<Eigen::Index>(k)) = d.data.values.col(static_cast<Eigen::Index>(mb[k]));
        Eigen::VectorXd t(d.data.values.rows());
        for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = d.data.target[static_cast<std::size_t>(i)];
        const Eigen::VectorXd rt = residual_on(Z, t);
        for (std::size_t v = 0; v < net.n_nodes; ++v) {
            if (v == net.target_index || desc.count(v)) continue;
            const auto f = net.feature_of(v);
            if (std::binary_search(mb.begin(), mb.end(), f)) continue;
            const Eigen::VectorXd rx = residual_on(Z, d.data.values.col(static_cast<Eigen::Index>(f)));
            const double r = rt.dot(rx) / std::sqrt(rt.squaredNorm() * rx.squaredNorm());
            EXPECT_LT(std::abs(r), 0.03) << "seed " << seed << " node " << v;
            ++checked;
        }
    }
    EXPECT_GT(checked, 50);
}

// ============================================================================
// SNP data
// ============================================================================

TEST(Snp, NoiseVarianceLimits) {
    EXPECT_EQ(snp_noise_variance(2.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(snp_noise_variance(2.0, 0.5), 2.0);
    EXPECT_NEAR(snp_noise_variance(1.0, 1.0 - 1e-9), 0.0, 1e-8);
    EXPECT_THROW(snp_noise_variance(1.0, 0.0), PreconditionError);
}

TEST(Snp, GenotypeMomentsFollowTheAlleleFrequency) {
    const auto d = generate_snp(100000, 20, 5, 0.5, 13);
    for (Eigen::Index j = 0; j < d.data.values.cols(); ++j) {
        const auto col = d.data.values.col(j);
        std::size_t counts[3] = {0, 0, 0};
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            const double v = col[i];
            ASSERT_TRUE(v == 0.0 || v == 1.0 || v == 2.0);
            ++counts[static_cast<int>(v)];
        }
        const double n = static_cast<double>(col.size());
        const double p = col.mean() / 2.0;
        EXPECT_GE(p, 0.04);
        EXPECT_LE(p, 0.96);
        const double var = (col.array() - col.mean()).square().sum() / (n - 1.0);
        EXPECT_NEAR(var, 2.0 * p * (1.0 - p), 0.02);
        // Hardy-Weinberg proportions.
        EXPECT_NEAR(static_cast<double>(counts[0]) / n, (1 - p) * (1 - p), 0.01);
        EXPECT_NEAR(static_cast<double>(counts[2]) / n, p * p, 0.01);
    }
}

TEST(Snp, OutcomeIsBalancedAndCausalIdsAreValid) {
    for (std::uint64_t seed : {14u, 15u, 16u}) {
        const auto d = generate_snp(100000, 50, 10, 0.3, seed);
        EXPECT_NEAR(d.data.class_frequency(), 0.5, 0.02);
        ASSERT_EQ(d.truth.size(), 10u);
        EXPECT_TRUE(std::is_sorted(d.truth.begin(), d.truth.end()));
        EXPECT_EQ(std::set<std::size_t>(d.truth.begin(), d.truth.end()).size(), 10u);
        EXPECT_LT(d.truth.back(), 50u);
    }
}

TEST(Snp, NoMonomorphicColumnsAndDomainChecks) {
    const auto d = generate_snp(20, 200, 3, 0.5, 17);
    for (Eigen::Index j = 0; j < d.data.values.cols(); ++j)
        EXPECT_GT(d.data.values.col(j).maxCoeff(), d.data.values.col(j).minCoeff());
    EXPECT_THROW(generate_snp(100, 5, 6, 0.5, 1), PreconditionError);
    EXPECT_THROW(generate_snp(100, 5, 2, 1.0, 1), PreconditionError);
}
