#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "smilepc/perturb.hpp"
#include "smilepc/surrogate.hpp"

using namespace smilepc;

namespace {

struct Problem {
    MaskMatrix masks{0, 0};
    std::vector<double> y, w;
};

Problem random_problem(std::uint64_t seed, std::size_t np, std::size_t c) {
    Rng rng(seed);
    Problem p;
    p.masks = generate_masks(np, c, seed);
    for (std::size_t i = 0; i < np; ++i) {
        p.y.push_back(rng.uniform());
        p.w.push_back(std::exp(-std::pow(rng.uniform(0, 2), 2)));
    }
    return p;
}

std::vector<std::vector<double>> dense_rows(const MaskMatrix& m) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < m.rows(); ++i) rows.emplace_back(m.row(i).begin(), m.row(i).end());
    return rows;
}

// max_k |(Z_aug^T W r)_k| for the fitted residual r.
double orthogonality_gap(const Problem& p, const SurrogateFit& fit) {
    std::vector<double> g(p.masks.cols() + 1, 0.0);
    for (std::size_t i = 0; i < p.masks.rows(); ++i) {
        const double r = p.w[i] * (p.y[i] - fit.predictions[i]);
        g[0] += r;
        for (std::size_t j = 0; j < p.masks.cols(); ++j) g[j + 1] += p.masks(i, j) * r;
    }
    double worst = 0;
    for (double v : g) worst = std::max(worst, std::abs(v));
    return worst;
}

double norm2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST(Wls, ExactRecoveryOfLinearTargets) {
    const auto m = generate_masks(50, 4, 3);
    std::vector<double> y, w(50, 1.0);
    for (std::size_t i = 0; i < 50; ++i) y.push_back(2.0 + 3.0 * m(i, 1));
    const auto fit = fit_wls(m, y, w);
    EXPECT_NEAR(fit.intercept, 2.0, 1e-8);
    EXPECT_NEAR(fit.coefficients[1], 3.0, 1e-8);
    for (std::size_t j : {0u, 2u, 3u}) EXPECT_NEAR(fit.coefficients[j], 0.0, 1e-8);
}

TEST(Wls, MatchesNormalEquationOracle) {
    const auto p = random_problem(11, 20, 4);
    const auto fit = fit_wls(p.masks, p.y, p.w);
    const auto beta = oracle::wls_normal_equations(dense_rows(p.masks), p.y, p.w);
    EXPECT_NEAR(fit.intercept, beta[0], 1e-8 * std::max(1.0, std::abs(beta[0])));
    for (std::size_t j = 0; j < 4; ++j)
        EXPECT_NEAR(fit.coefficients[j], beta[j + 1], 1e-8 * std::max(1.0, std::abs(beta[j + 1])));
}

TEST(Wls, ZeroWeightRowsAreIgnored) {
    auto p = random_problem(4, 40, 5);
    MaskMatrix kept(20, 5);
    std::vector<double> ky, kw;
    for (std::size_t i = 0; i < 40; ++i) {
        if (i % 2) {
            p.w[i] = 0;
        } else {
            for (std::size_t j = 0; j < 5; ++j) kept(i / 2, j) = p.masks(i, j);
            ky.push_back(p.y[i]);
            kw.push_back(p.w[i]);
        }
    }
    const auto full = fit_wls(p.masks, p.y, p.w);
    const auto half = fit_wls(kept, ky, kw);
    EXPECT_NEAR(full.intercept, half.intercept, 1e-10);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(full.coefficients[j], half.coefficients[j], 1e-10);
}

TEST(Wls, ResidualsAreWeightOrthogonal) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto p = random_problem(seed, 16 + seed, 1 + seed % 8);
        const auto fit = fit_wls(p.masks, p.y, p.w);
        EXPECT_LE(orthogonality_gap(p, fit), 1e-6 * norm2(p.y)) << "seed " << seed;
    }
}

TEST(Wls, WeightScaleInvariance) {
    auto p = random_problem(8, 60, 6);
    const auto a = fit_wls(p.masks, p.y, p.w);
    for (auto& v : p.w) v *= 37.5;
    const auto b = fit_wls(p.masks, p.y, p.w);
    EXPECT_NEAR(a.intercept, b.intercept, 1e-10);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(a.coefficients[j], b.coefficients[j], 1e-10);
}

TEST(Wls, RankDeficientProblemStaysFinite) {
    // Fewer rows than unknowns and duplicated rows.
    MaskMatrix m(3, 6);
    for (std::size_t j = 0; j < 6; ++j) m(0, j) = 1, m(1, j) = j % 2, m(2, j) = j % 2;
    const std::vector<double> y{0.9, 0.4, 0.5}, w{1, 1, 1};
    const auto fit = fit_wls(m, y, w);
    for (double c : fit.coefficients) EXPECT_TRUE(std::isfinite(c));
    EXPECT_NEAR(fit.predictions[0], 0.9, 1e-6);
    EXPECT_NEAR(fit.predictions[1], 0.45, 1e-6);
}

TEST(Wls, CollapsedWeightsStillFit) {
    auto p = random_problem(2, 200, 32);
    for (std::size_t i = 1; i < p.w.size(); ++i) p.w[i] = 1e-120;
    const auto fit = fit_wls(p.masks, p.y, p.w);
    for (double c : fit.coefficients) EXPECT_TRUE(std::isfinite(c));
    EXPECT_TRUE(std::isfinite(fit.intercept));
}

TEST(Wls, PredictionsFollowCoefficients) {
    const auto p = random_problem(5, 30, 7);
    const auto fit = fit_wls(p.masks, p.y, p.w);
    for (std::size_t i = 0; i < 30; ++i) {
        double g = fit.intercept;
        for (std::size_t j = 0; j < 7; ++j)
            if (p.masks(i, j)) g += fit.coefficients[j];
        EXPECT_EQ(fit.predictions[i], g);
    }
}

TEST(Wls, RejectsBadInputs) {
    const auto p = random_problem(1, 10, 3);
    EXPECT_THROW(fit_wls(p.masks, p.y, std::vector<double>(10, 0.0)), InvalidArgument);
    EXPECT_THROW(fit_wls(p.masks, std::vector<double>(9, 0.5), p.w), InvalidArgument);
    auto neg = p.w;
    neg[3] = -1;
    EXPECT_THROW(fit_wls(p.masks, p.y, neg), InvalidArgument);
}

TEST(BayesianRidge, NoiselessDataAgreesWithWls) {
    const auto m = generate_masks(400, 6, 9);
    std::vector<double> y, w;
    Rng rng(1);
    const std::vector<double> beta{0.3, -0.2, 0.05, 0.1, 0.0, -0.15};
    for (std::size_t i = 0; i < 400; ++i) {
        double v = 0.4;
        for (std::size_t j = 0; j < 6; ++j) v += beta[j] * m(i, j);
        y.push_back(v);
        w.push_back(rng.uniform(0.2, 1.0));
    }
    const auto br = fit_bayesian_ridge(m, y, w);
    const auto ls = fit_wls(m, y, w);
    EXPECT_NEAR(br.intercept, ls.intercept, 1e-3);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(br.coefficients[j], ls.coefficients[j], 1e-3);
}

TEST(BayesianRidge, ConstantTargetsShrinkToMean) {
    const auto m = generate_masks(100, 5, 2);
    const std::vector<double> y(100, 0.7), w(100, 0.5);
    const auto fit = fit_bayesian_ridge(m, y, w);
    for (double c : fit.coefficients) EXPECT_NEAR(c, 0.0, 1e-9);
    EXPECT_NEAR(fit.intercept, 0.7, 1e-9);
}

TEST(BayesianRidge, Deterministic) {
    const auto p = random_problem(6, 80, 8);
    const auto a = fit_bayesian_ridge(p.masks, p.y, p.w), b = fit_bayesian_ridge(p.masks, p.y, p.w);
    EXPECT_EQ(a.coefficients, b.coefficients);
    EXPECT_EQ(a.intercept, b.intercept);
}

TEST(BayesianRidge, WeightScaleKeepsTopClusters) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = random_problem(seed, 200, 10);
        const auto a = fit_bayesian_ridge(p.masks, p.y, p.w);
        for (auto& v : p.w) v *= 4.0;
        const auto b = fit_bayesian_ridge(p.masks, p.y, p.w);
        EXPECT_EQ(top_clusters(a, 0.3), top_clusters(b, 0.3)) << "seed " << seed;
    }
}

TEST(BayesianRidge, ShrinksNoisyCoefficientsTowardZero) {
    const auto p = random_problem(3, 40, 8);
    const auto br = fit_bayesian_ridge(p.masks, p.y, p.w);
    const auto ls = fit_wls(p.masks, p.y, p.w);
    EXPECT_LT(norm2(br.coefficients), norm2(ls.coefficients));
}

TEST(TopClusters, Examples) {
    SurrogateFit fit;
    fit.coefficients = {0.9, -0.5, 0.1, 0.7};
    EXPECT_EQ(top_clusters(fit, 0.5), (std::vector<std::size_t>{0, 3}));
    EXPECT_EQ(top_clusters(fit, 1.0), (std::vector<std::size_t>{0, 3, 2, 1}));
    EXPECT_EQ(top_clusters(fit, 0.5, Ranking::Absolute), (std::vector<std::size_t>{0, 3}));
    EXPECT_EQ(top_clusters(fit, 0.75, Ranking::Absolute), (std::vector<std::size_t>{0, 3, 1}));

    fit.coefficients.assign(8, 0.25);
    EXPECT_EQ(top_clusters(fit, 0.25), (std::vector<std::size_t>{0, 1}));
}

TEST(TopClusters, CountIsCeiling) {
    EXPECT_EQ(top_count(0.2, 32), 7u);
    EXPECT_EQ(top_count(0.2, 64), 13u);
    EXPECT_EQ(top_count(0.1, 30), 3u);
    EXPECT_EQ(top_count(1.0, 5), 5u);
    EXPECT_EQ(top_count(0.01, 5), 1u);
    EXPECT_THROW(top_count(0.0, 5), InvalidArgument);
    EXPECT_THROW(top_count(1.5, 5), InvalidArgument);
}

TEST(TopClusters, InvariantUnderPositiveScaling) {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        SurrogateFit fit;
        for (int j = 0; j < 16; ++j) fit.coefficients.push_back(rng.uniform(-1, 1));
        const auto before = top_clusters(fit, 0.2);
        for (auto& c : fit.coefficients) c *= 0.125;
        EXPECT_EQ(top_clusters(fit, 0.2), before);
    }
}

TEST(SurrogateJson, Shape) {
    const auto p = random_problem(1, 10, 2);
    const auto j = to_json(fit_wls(p.masks, p.y, p.w));
    EXPECT_EQ(j["kind"], "wls");
    EXPECT_EQ(j["coefficients"].size(), 2u);
    EXPECT_TRUE(j.contains("intercept"));
}
