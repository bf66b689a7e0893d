#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pfbp/citest.hpp"
#include "support.hpp"

using namespace pfbp;
using pfbp::testing::random_labels;
using pfbp::testing::random_matrix;

// ============================================================================
// Chi-square tails
// ============================================================================

TEST(ChiSquare, ZeroStatisticHasUnitSurvival) {
    for (std::size_t df : {1u, 2u, 3u, 7u, 30u, 2000u}) EXPECT_EQ(chisq_log_sf(0.0, df), 0.0);
}

TEST(ChiSquare, TwoDegreesOfFreedomIsExactlyHalfX) {
    EXPECT_EQ(chisq_log_sf(10.0, 2), -5.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1e4);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        EXPECT_NEAR(chisq_log_sf(x, 2), -0.5 * x, 1e-12 * std::max(1.0, 0.5 * x));
    }
}

TEST(ChiSquare, FourDfMatchesQuadratureOracle) {
    const double x = -4.0 * std::log(0.05);
    const double oracle = std::log(pfbp::testing::chisq_sf_quadrature(x, 4));
    EXPECT_NEAR(chisq_log_sf(x, 4), oracle, 1e-8 * std::abs(oracle));
    // Closed form for df = 4: SF = e^{-x/2} (1 + x/2).
    EXPECT_NEAR(chisq_log_sf(x, 4), -0.5 * x + std::log1p(0.5 * x), 1e-13);
    EXPECT_NEAR(chisq_log_sf(11.9829, 4), std::log(0.01748), 1e-3);
}

TEST(ChiSquare, AgreesWithIncompleteGammaAcrossRegimes) {
    for (std::size_t df : {1u, 2u, 3u, 4u, 5u, 10u, 11u, 30u, 31u, 200u, 201u, 2000u}) {
        for (double scale : {0.01, 0.3, 0.9, 1.0, 1.1, 2.0, 5.0, 20.0}) {
            const double x = scale * static_cast<double>(df) + (df == 1 ? scale : 0.0);
            const double oracle = pfbp::testing::chisq_log_sf_boost(x, df);
            if (!std::isfinite(oracle) || oracle < -600) continue;
            EXPECT_NEAR(chisq_log_sf(x, df), oracle, 1e-10 * std::max(1.0, std::abs(oracle)))
                << "df=" << df << " x=" << x;
        }
    }
}

TEST(ChiSquare, DeepTailStaysFiniteAndMonotone) {
    for (std::size_t df : {1u, 3u, 4u, 200u}) {
        double prev = 0.0;
        for (double x = 1.0; x <= 1e6; x *= 3.0) {
            const double v = chisq_log_sf(x, df);
            ASSERT_TRUE(std::isfinite(v)) << "df=" << df << " x=" << x;
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
    // Large-x asymptotics: ln SF ~ -x/2 + (k-1) ln(x/2) - lgamma(k) for k = df/2.
    const double x = 1e6;
    const double k = 1.5;
    const double approx = -0.5 * x + (k - 1.0) * std::log(0.5 * x) - std::lgamma(k);
    EXPECT_NEAR(chisq_log_sf(x, 3), approx, 1e-10 * std::abs(approx));
}

TEST(ChiSquare, RejectsInvalidArguments) {
    EXPECT_THROW(chisq_log_sf(-1.0, 3), PreconditionError);
    EXPECT_THROW(chisq_log_sf(1.0, 0), PreconditionError);
}

TEST(ChiSquare, InverseSurvivalBracketsThreshold) {
    for (std::size_t df : {1u, 2u, 4u, 30u, 900u}) {
        for (double alpha : {0.05, 0.01, 1e-10}) {
            const double la = std::log(alpha);
            const double c = chisq_isf(la, df);
            EXPECT_GE(chisq_log_sf(c, df), la);
            EXPECT_LT(chisq_log_sf(std::nextafter(c, 1e300), df), la);
        }
    }
    EXPECT_NEAR(chisq_isf(std::log(0.05), 1), 3.841458820694124, 1e-9);
}

// ============================================================================
// Logistic regression
// ============================================================================

TEST(Logistic, InterceptOnlyBalanced) {
    std::vector<std::uint8_t> y{0, 1, 0, 1, 1, 0, 0, 1};
    const Eigen::MatrixXd X(8, 0);
    const auto fit = fit_logistic(X, y);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.beta[0], 0.0, 1e-12);
    EXPECT_NEAR(fit.log_likelihood, 8.0 * std::log(0.5), 1e-12);
}

TEST(Logistic, InterceptOnlyIsLogitOfFrequency) {
    std::vector<std::uint8_t> y{1, 1, 1, 0, 1, 1, 1, 0};
    const auto fit = fit_logistic(Eigen::MatrixXd(8, 0), y);
    EXPECT_NEAR(fit.beta[0], std::log(3.0), 1e-9);
}

TEST(Logistic, RecoversGeneratingCoefficients) {
    const auto ds = pfbp::testing::logistic_dataset(5, 20000, 3, {0.5, 1.0, -0.7, 0.0});
    const auto fit = fit_logistic(ds.values, ds.target);
    ASSERT_TRUE(fit.converged);
    EXPECT_EQ(fit.method_used, FitMethod::Newton);
    EXPECT_NEAR(fit.beta[0], 0.5, 0.06);
    EXPECT_NEAR(fit.beta[1], 1.0, 0.06);
    EXPECT_NEAR(fit.beta[2], -0.7, 0.06);
    EXPECT_NEAR(fit.beta[3], 0.0, 0.06);
    EXPECT_NEAR(fit.log_likelihood, pfbp::testing::logistic_ll_direct(ds.values, ds.target, fit.beta), 1e-7);
}

TEST(Logistic, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 25; ++rep) {
        const Eigen::MatrixXd X = random_matrix(rng, 30, 4);
        const auto y = random_labels(rng, 30);
        Eigen::VectorXd beta = random_matrix(rng, 5, 1).col(0);
        Eigen::VectorXd grad;
        logistic_log_likelihood(X, y, beta, &grad);
        for (Eigen::Index k = 0; k < beta.size(); ++k) {
            const double h = 1e-5;
            Eigen::VectorXd bp = beta, bm = beta;
            bp[k] += h;
            bm[k] -= h;
            const double fd = (pfbp::testing::logistic_ll_direct(X, y, bp) -
                               pfbp::testing::logistic_ll_direct(X, y, bm)) / (2.0 * h);
            EXPECT_NEAR(grad[k], fd, 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(Logistic, SeparableDataKeepsMonotoneTraceAndFiniteCoefficients) {
    Eigen::MatrixXd X(20, 1);
    std::vector<std::uint8_t> y(20);
    for (int i = 0; i < 20; ++i) {
        X(i, 0) = i - 9.5;
        y[static_cast<std::size_t>(i)] = X(i, 0) > 0 ? 1 : 0;
    }
    LogisticOptions opts;
    opts.record_trace = true;
    const auto fit = fit_logistic(X, y, opts);
    ASSERT_GE(fit.trace.size(), 2u);
    for (std::size_t i = 1; i < fit.trace.size(); ++i) EXPECT_GE(fit.trace[i], fit.trace[i - 1]);
    EXPECT_TRUE(fit.beta.allFinite());
    EXPECT_LE(fit.beta.cwiseAbs().maxCoeff(), opts.coef_cap);
    EXPECT_LE(fit.log_likelihood, 0.0);
    EXPECT_GT(fit.log_likelihood, -1.0);
}

TEST(Logistic, TraceIsMonotoneOnRandomProblems) {
    std::mt19937_64 rng(3);
    LogisticOptions opts;
    opts.record_trace = true;
    for (int rep = 0; rep < 50; ++rep) {
        const auto n = 20 + static_cast<std::size_t>(rep) * 7;
        Eigen::MatrixXd X = random_matrix(rng, n, 1 + static_cast<std::size_t>(rep % 6));
        X *= 1.0 + rep % 5;
        const auto y = random_labels(rng, n, 0.3);
        const auto fit = fit_logistic(X, y, opts);
        for (std::size_t i = 1; i < fit.trace.size(); ++i) ASSERT_GE(fit.trace[i], fit.trace[i - 1]);
        EXPECT_TRUE(std::isfinite(fit.log_likelihood));
        EXPECT_EQ(fit.beta.size(), X.cols() + 1);
    }
}

TEST(Logistic, CollinearDesignStillFits) {
    std::mt19937_64 rng(8);
    Eigen::MatrixXd X = random_matrix(rng, 200, 2);
    X.col(1) = X.col(0);
    const auto y = random_labels(rng, 200);
    const auto fit = fit_logistic(X, y);
    EXPECT_TRUE(std::isfinite(fit.log_likelihood));
    const auto reduced = fit_logistic(X.leftCols(1), y);
    EXPECT_NEAR(fit.log_likelihood, reduced.log_likelihood, 1e-6);
}

TEST(Logistic, RejectsMismatchedShapes) {
    std::vector<std::uint8_t> y{0, 1, 1};
    EXPECT_THROW(fit_logistic(Eigen::MatrixXd::Zero(4, 1), y), PreconditionError);
    EXPECT_THROW(fit_logistic(Eigen::MatrixXd::Zero(3, 1), y, {}, Eigen::VectorXd::Zero(3)), PreconditionError);
}

// ============================================================================
// Likelihood-ratio test
// ============================================================================

TEST(Lrt, DuplicateOfConditioningColumnCarriesNoEvidence) {
    const auto ds = pfbp::testing::logistic_dataset(9, 500, 2, {0.0, 1.0, 0.5});
    const auto r = lrt(ds.values, ds.values.col(1), ds.target);
    EXPECT_NEAR(r.statistic, 0.0, 1e-6);
    EXPECT_NEAR(r.log_p, 0.0, 1e-3);
}

TEST(Lrt, TargetAsCandidateIsOverwhelming) {
    std::mt19937_64 rng(1);
    std::vector<std::uint8_t> y(100);
    for (std::size_t i = 0; i < 100; ++i) y[i] = i % 2;
    Eigen::VectorXd x(100);
    for (Eigen::Index i = 0; i < 100; ++i) x[i] = y[static_cast<std::size_t>(i)];
    const auto r = lrt(Eigen::MatrixXd(100, 0), x, y);
    EXPECT_GT(r.statistic, 50.0);
    // Oracle: the statistic is twice the likelihood gain evaluated at the fitted beta.
    const auto full = fit_logistic(Eigen::MatrixXd(x), y);
    const double ll_full = pfbp::testing::logistic_ll_direct(Eigen::MatrixXd(x), y, full.beta);
    EXPECT_NEAR(r.statistic, 2.0 * (ll_full - 100.0 * std::log(0.5)), 1e-6);
}

TEST(Lrt, SingleClassSliceIsUninformative) {
    std::vector<std::uint8_t> y(10, 1);
    const auto r = lrt(Eigen::MatrixXd::Zero(10, 1), Eigen::VectorXd::LinSpaced(10, 0, 1), y);
    EXPECT_FALSE(r.informative);
    EXPECT_EQ(r.log_p, 0.0);
    EXPECT_EQ(r.statistic, 0.0);
}

TEST(Lrt, NestedFitsNeverLoseLikelihood) {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 30 + static_cast<std::size_t>(rep);
        const Eigen::MatrixXd X = random_matrix(rng, n, 1 + static_cast<std::size_t>(rep % 4));
        const Eigen::VectorXd c = random_matrix(rng, n, 1).col(0);
        const auto y = random_labels(rng, n, 0.4);
        const auto r = lrt(X, c, y);
        const auto null = fit_logistic(X, y);
        EXPECT_GE(r.log_likelihood_full, null.log_likelihood - 1e-8);
        EXPECT_GE(r.statistic, 0.0);
        EXPECT_LE(r.log_p, 0.0);
    }
}

TEST(Lrt, NullPValuesAreUniform) {
    std::mt19937_64 rng(2024);
    std::vector<double> p;
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::MatrixXd X = random_matrix(rng, 300, 2);
        const Eigen::VectorXd c = random_matrix(rng, 300, 1).col(0);
        std::vector<std::uint8_t> y(300);
        std::uniform_real_distribution<double> u;
        for (std::size_t i = 0; i < 300; ++i)
            y[i] = u(rng) < 1.0 / (1.0 + std::exp(-0.8 * X(static_cast<Eigen::Index>(i), 0))) ? 1 : 0;
        p.push_back(std::exp(lrt(X, c, y).log_p));
    }
    const double d = pfbp::testing::ks_statistic_uniform(p);
    EXPECT_LT(d, 0.05);
    EXPECT_GT(pfbp::testing::ks_p_value(d, p.size()), 0.01);
}

// ============================================================================
// Score test
// ============================================================================

TEST(ScoreTest, HandComputedExample) {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    // sum x(y - 1/2) = 2, ybar(1-ybar) = 1/4, sum (x - 5/2)^2 = 5.
    const double oracle = 2.0 / std::sqrt(0.25 * 5.0);
    const auto z = score_statistic(x, y);
    ASSERT_TRUE(z.has_value());
    EXPECT_NEAR(*z, oracle, 1e-15);
    EXPECT_NEAR(*z, 1.7889, 1e-4);
    const auto r = score_test_univariate(x, y);
    EXPECT_NEAR(r.statistic, oracle * oracle, 1e-14);
    EXPECT_NEAR(r.log_p, chisq_log_sf(3.2, 1), 1e-14);
}

TEST(ScoreTest, ConstantFeatureOrSingleClassIsUninformative) {
    const std::vector<double> x(6, 2.5);
    const std::vector<std::uint8_t> y{0, 1, 0, 1, 0, 1};
    EXPECT_FALSE(score_test_univariate(x, y).informative);
    EXPECT_EQ(score_test_univariate(x, y).log_p, 0.0);
    const std::vector<double> x2{1, 2, 3, 4, 5, 6};
    const std::vector<std::uint8_t> y2(6, 0);
    EXPECT_FALSE(score_test_univariate(x2, y2).informative);
}

TEST(ScoreTest, CloseToLrtAtLargeSamples) {
    const auto ds = pfbp::testing::logistic_dataset(77, 5000, 1, {0.0, 0.08});
    const auto s = score_test_univariate(ds.column(0), ds.target);
    const auto l = lrt(Eigen::MatrixXd(5000, 0), ds.values.col(0), ds.target);
    ASSERT_LT(l.log_p, -1.0);
    EXPECT_LT(std::abs(s.log_p - l.log_p), 0.1 * std::abs(l.log_p));
}

TEST(ScoreTest, DecisionsAgreeWithLrtOnModerateBlocks) {
    std::mt19937_64 rng(404);
    int agree = 0, total = 0;
    const double la = std::log(0.01);
    for (int rep = 0; rep < 300; ++rep) {
        const double b = (rep % 3) * 0.1;
        const auto ds = pfbp::testing::logistic_dataset(1000 + static_cast<std::uint64_t>(rep), 500, 1, {0.0, b});
        const auto s = score_test_univariate(ds.column(0), ds.target);
        const auto l = lrt(Eigen::MatrixXd(500, 0), ds.values.col(0), ds.target);
        agree += (s.log_p <= la) == (l.log_p <= la);
        ++total;
    }
    EXPECT_GE(agree, total * 97 / 100);
}

TEST(ScoreTest, NullPValuesAreUniform) {
    std::mt19937_64 rng(99);
    std::vector<double> p;
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::MatrixXd X = random_matrix(rng, 300, 1);
        const auto y = random_labels(rng, 300, 0.35);
        p.push_back(std::exp(score_test_univariate(std::span<const double>(X.data(), 300), y).log_p));
    }
    EXPECT_GT(pfbp::testing::ks_p_value(pfbp::testing::ks_statistic_uniform(p), p.size()), 0.01);
}
