#pragma once

// Interpretable surrogates mapping mask rows to the explained-class probability.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "smilepc/error.hpp"
#include "smilepc/perturb.hpp"

namespace smilepc {

enum class SurrogateKind { WeightedLeastSquares, BayesianRidge };

inline std::string_view surrogate_name(SurrogateKind k) {
    return k == SurrogateKind::WeightedLeastSquares ? "wls" : "bayes";
}

inline std::optional<SurrogateKind> parse_surrogate(std::string_view s) {
    if (s == "wls") return SurrogateKind::WeightedLeastSquares;
    if (s == "bayes") return SurrogateKind::BayesianRidge;
    return std::nullopt;
}

struct SurrogateFit {
    SurrogateKind kind = SurrogateKind::WeightedLeastSquares;
    double intercept = 0;
    std::vector<double> coefficients;
    /// g(Z_i) = intercept + sum_j coefficients[j] * mask(i, j), per mask row.
    std::vector<double> predictions;

    double predict(std::span<const std::uint8_t> row) const {
        double g = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j)
            if (row[j]) g += coefficients[j];
        return g;
    }
};

namespace detail {

inline void check_fit_inputs(const MaskMatrix& masks, std::span<const double> targets, std::span<const double> weights) {
    if (targets.size() != masks.rows() || weights.size() != masks.rows())
        throw InvalidArgument("targets and weights must have one entry per mask row");
    bool any = false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0) || !std::isfinite(weights[i])) throw InvalidArgument("weights must be finite and >= 0");
        if (!std::isfinite(targets[i])) throw InvalidArgument("targets must be finite");
        any = any || weights[i] > 0;
    }
    if (!any) throw InvalidArgument("all weights are zero");
}

inline void fill_predictions(const MaskMatrix& masks, SurrogateFit& fit) {
    fit.predictions.resize(masks.rows());
    for (std::size_t i = 0; i < masks.rows(); ++i) fit.predictions[i] = fit.predict(masks.row(i));
}

}  // namespace detail

/// Relative eigenvalue floor applied to the normal matrix.
inline constexpr double kRidgeFloor = 1e-8;

/// Weighted least squares with intercept:
///   min sum_i w_i (y_i - b0 - b^T z_i)^2.
/// Solved through the eigendecomposition of the augmented normal matrix;
/// eigenvalues below kRidgeFloor * lambda_max are lifted to that floor, which
/// leaves well-conditioned problems exact and keeps rank-deficient ones bounded.
inline SurrogateFit fit_wls(const MaskMatrix& masks, std::span<const double> targets, std::span<const double> weights) {
    detail::check_fit_inputs(masks, targets, weights);
    const std::size_t p = masks.cols() + 1;
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    std::vector<Eigen::Index> on;
    for (std::size_t i = 0; i < masks.rows(); ++i) {
        const double w = weights[i];
        if (w == 0) continue;
        on.clear();
        on.push_back(0);
        for (std::size_t j = 0; j < masks.cols(); ++j)
            if (masks(i, j)) on.push_back(static_cast<Eigen::Index>(j + 1));
        for (auto r : on) {
            rhs(r) += w * targets[i];
            for (auto c : on) normal(r, c) += w;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double floor = kRidgeFloor * std::max(lambda.maxCoeff(), 0.0);
    Eigen::VectorXd proj = eig.eigenvectors().transpose() * rhs;
    for (Eigen::Index k = 0; k < proj.size(); ++k) proj(k) /= std::max(lambda(k), floor);
    const Eigen::VectorXd beta = eig.eigenvectors() * proj;

    SurrogateFit fit;
    fit.kind = SurrogateKind::WeightedLeastSquares;
    fit.intercept = beta(0);
    fit.coefficients.resize(masks.cols());
    for (std::size_t j = 0; j < masks.cols(); ++j) fit.coefficients[j] = beta(static_cast<Eigen::Index>(j + 1));
    detail::fill_predictions(masks, fit);
    return fit;
}

struct BayesianRidgeOptions {
    std::size_t max_iterations = 300;
    double tolerance = 1e-4;  // relative change of alpha and lambda
    double alpha_1 = 1e-6, alpha_2 = 1e-6;
    double lambda_1 = 1e-6, lambda_2 = 1e-6;
};

/// Evidence-maximizing Bayesian ridge regression (alpha = noise precision,
/// lambda = weight precision, Gamma hyperpriors). Data are centered with
/// weighted means and row i is scaled by sqrt(w_i); the intercept is recovered
/// from the offsets.
inline SurrogateFit fit_bayesian_ridge(const MaskMatrix& masks, std::span<const double> targets,
                                       std::span<const double> weights, BayesianRidgeOptions opts = {}) {
    detail::check_fit_inputs(masks, targets, weights);
    const auto n = static_cast<Eigen::Index>(masks.rows());
    const auto p = static_cast<Eigen::Index>(masks.cols());

    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    Eigen::VectorXd x_offset = Eigen::VectorXd::Zero(p);
    double y_offset = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weights[static_cast<std::size_t>(i)] / wsum;
        y_offset += w * targets[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < p; ++j) x_offset(j) += w * masks(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }

    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = std::sqrt(weights[static_cast<std::size_t>(i)]);
        y(i) = s * (targets[static_cast<std::size_t>(i)] - y_offset);
        for (Eigen::Index j = 0; j < p; ++j)
            x(i, j) = s * (masks(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) - x_offset(j));
    }

    const Eigen::MatrixXd gram = x.transpose() * x;
    const Eigen::VectorXd xty = x.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& vecs = eig.eigenvectors();
    const Eigen::VectorXd proj = vecs.transpose() * xty;

    const double y_mean = y.mean();
    const double y_var = (y.array() - y_mean).square().mean();
    double alpha = 1.0 / (y_var + std::numeric_limits<double>::epsilon());
    double lambda = 1.0;

    auto solve = [&](double a, double l) -> Eigen::VectorXd {
        Eigen::VectorXd t(p);
        for (Eigen::Index k = 0; k < p; ++k) t(k) = proj(k) / (ev(k) + l / a);
        return vecs * t;
    };

    Eigen::VectorXd coef = solve(alpha, lambda);
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        const double rmse = (y - x * coef).squaredNorm();
        double gamma = 0;
        for (Eigen::Index k = 0; k < p; ++k) gamma += alpha * ev(k) / (lambda + alpha * ev(k));
        const double new_lambda = (gamma + 2 * opts.lambda_1) / (coef.squaredNorm() + 2 * opts.lambda_2);
        const double new_alpha = (static_cast<double>(n) - gamma + 2 * opts.alpha_1) / (rmse + 2 * opts.alpha_2);
        const bool converged = std::abs(new_alpha - alpha) <= opts.tolerance * std::abs(alpha) &&
                               std::abs(new_lambda - lambda) <= opts.tolerance * std::abs(lambda);
        alpha = new_alpha;
        lambda = new_lambda;
        coef = solve(alpha, lambda);
        if (converged) break;
    }

    SurrogateFit fit;
    fit.kind = SurrogateKind::BayesianRidge;
    fit.coefficients.assign(coef.data(), coef.data() + p);
    fit.intercept = y_offset - x_offset.dot(coef);
    detail::fill_predictions(masks, fit);
    return fit;
}

inline SurrogateFit fit_surrogate(SurrogateKind kind, const MaskMatrix& masks, std::span<const double> targets,
                                  std::span<const double> weights) {
    return kind == SurrogateKind::WeightedLeastSquares ? fit_wls(masks, targets, weights)
                                                       : fit_bayesian_ridge(masks, targets, weights);
}

enum class Ranking { Signed, Absolute };

/// The `k` most important clusters, most important first. Ties go to the smaller index.
inline std::vector<std::size_t> top_k(const SurrogateFit& fit, std::size_t k, Ranking ranking = Ranking::Signed) {
    std::vector<std::size_t> idx(fit.coefficients.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto score = [&](std::size_t i) {
        return ranking == Ranking::Signed ? fit.coefficients[i] : std::abs(fit.coefficients[i]);
    };
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

/// Number of clusters selected by a fraction: ceil(fraction * C).
inline std::size_t top_count(double fraction, std::size_t c) {
    if (!(fraction > 0 && fraction <= 1)) throw InvalidArgument("top fraction must be in (0, 1]");
    // Tolerance keeps products like 0.1 * 30 from rounding up past the integer.
    const double raw = fraction * static_cast<double>(c);
    return std::min(c, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

inline std::vector<std::size_t> top_clusters(const SurrogateFit& fit, double fraction,
                                             Ranking ranking = Ranking::Signed) {
    return top_k(fit, top_count(fraction, fit.coefficients.size()), ranking);
}

inline nlohmann::json to_json(const SurrogateFit& fit) {
    return {{"kind", surrogate_name(fit.kind)}, {"intercept", fit.intercept}, {"coefficients", fit.coefficients}};
}

}  // namespace smilepc
