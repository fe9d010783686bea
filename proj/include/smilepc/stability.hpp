#pragma once

// Explanation stability under ball insertion, scored with the Jaccard index.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "json.hpp"
#include "smilepc/explain.hpp"

namespace smilepc {

/// |A n B| / |A u B|; two empty sets score 1.
inline double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    const std::set<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (auto x : sa) inter += sb.count(x);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct BallInsertion {
    PointCloud cloud;            // original points followed by the ball points
    ClusterModel clusters;       // original model plus one cluster (id = old C) for the ball
    Point3 center{0, 0, 0};
    std::size_t ball_cluster = 0;
};

/// `n_ball` points uniform inside the ball of `radius` around `center`.
inline std::vector<Point3> sample_ball(const Point3& center, std::size_t n_ball, double radius, Rng& rng) {
    std::vector<Point3> pts;
    pts.reserve(n_ball);
    for (std::size_t i = 0; i < n_ball; ++i) {
        Point3 d;
        double r2;
        do {
            d = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        } while (r2 > 1.0);
        pts.push_back({center[0] + radius * d[0], center[1] + radius * d[1], center[2] + radius * d[2]});
    }
    return pts;
}

/// Appends a ball of `n_ball` points centered on an existing point chosen
/// uniformly from `candidates` (all points when empty). The ball becomes one
/// extra cluster; original assignments are untouched.
inline BallInsertion insert_ball(const PointCloud& cloud, const ClusterModel& clusters, std::size_t n_ball, double radius,
                                 std::uint64_t seed, std::span<const std::size_t> candidates = {}) {
    if (cloud.empty()) throw InvalidArgument("cannot insert into an empty cloud");
    if (n_ball == 0) throw InvalidArgument("ball must have at least one point");
    if (!(radius >= 0) || !std::isfinite(radius)) throw InvalidArgument("ball radius must be finite and >= 0");
    if (clusters.assignment.size() != cloud.size()) throw InvalidArgument("cluster model does not cover the cloud");

    Rng rng(seed);
    std::size_t center_idx;
    if (candidates.empty()) {
        center_idx = static_cast<std::size_t>(rng.index(cloud.size()));
    } else {
        center_idx = candidates[static_cast<std::size_t>(rng.index(candidates.size()))];
        if (center_idx >= cloud.size()) throw InvalidArgument("ball center candidate out of range");
    }

    BallInsertion out;
    out.center = cloud[center_idx];
    std::vector<Point3> pts = cloud.points();
    for (const auto& p : sample_ball(out.center, n_ball, radius, rng)) pts.push_back(p);
    out.cloud = PointCloud(std::move(pts));

    out.ball_cluster = clusters.c;
    out.clusters = clusters;
    out.clusters.c = clusters.c + 1;
    out.clusters.assignment.resize(cloud.size() + n_ball, out.ball_cluster);
    out.clusters.centroids.push_back(out.center);
    out.clusters.sse_history.clear();
    return out;
}

struct StabilityOptions {
    std::size_t trials = 10;
    std::size_t n_ball = 30;
    /// Ball radius; default 0.05 x bounding-box diagonal of the cloud.
    std::optional<double> radius;
    std::uint64_t seed = 0;
    /// Point indices eligible as ball centers; empty means every point.
    std::vector<std::size_t> center_candidates;
    /// Attempts allowed per requested trial before giving up.
    std::size_t attempts_per_trial = 10;
};

struct StabilityTrial {
    std::size_t attempt = 0;
    Point3 center{0, 0, 0};
    std::vector<std::size_t> top_set;
    double jaccard = 0;
};

struct StabilityReport {
    std::size_t trials = 0;
    std::vector<double> per_trial_jaccard;
    double mean_jaccard = 0;
    std::vector<Point3> ball_centers;
    double radius = 0;
    std::size_t discarded = 0;
    std::vector<std::size_t> reference_top_set;
    std::vector<StabilityTrial> details;
};

class StabilityError : public Error {
public:
    using Error::Error;
};

/// Explains the clean cloud, then `trials` ball-inserted copies whose predicted
/// class is unchanged, with the same config over the frozen clusters plus the
/// ball cluster. Top sets of size ceil(top_fraction * C) are compared.
/// Insertions that flip the prediction are discarded and redrawn.
/// `on_trial`, when set, sees each counted trial with its inserted cloud and explanation.
inline StabilityReport stability_run(
    const PointCloud& cloud, Classifier& model, const ExplainConfig& cfg, const StabilityOptions& opts,
    const ExecutionOptions& exec = {},
    const std::function<void(const StabilityTrial&, const BallInsertion&, const Explanation&)>& on_trial = {}) {
    if (opts.trials == 0) throw InvalidArgument("stability needs at least one trial");
    cfg.validate();

    const Explanation reference = explain(cloud, model, cfg, exec);
    const std::size_t k = top_count(cfg.top_fraction, cfg.clusters);
    const auto reference_top = top_k(reference.fit, k, cfg.ranking);
    const std::size_t reference_label = ClassifierOutput{reference.f_original}.argmax();

    StabilityReport report;
    report.radius = opts.radius.value_or(0.05 * bounding_diagonal(cloud));
    report.reference_top_set = reference_top;

    ExplainConfig trial_cfg = cfg;
    trial_cfg.explained_class = reference.explained_class;

    const std::size_t max_attempts = opts.trials * opts.attempts_per_trial;
    for (std::size_t attempt = 0; attempt < max_attempts && report.per_trial_jaccard.size() < opts.trials; ++attempt) {
        const BallInsertion ins = insert_ball(cloud, reference.cluster_model, opts.n_ball, report.radius,
                                              derive_seed(opts.seed, "ball", attempt), opts.center_candidates);
        if (model.classify_one(ins.cloud).argmax() != reference_label) {
            ++report.discarded;
            continue;
        }
        const Explanation ex = explain_with_clusters(ins.cloud, model, trial_cfg, ins.clusters, exec);
        StabilityTrial t;
        t.attempt = attempt;
        t.center = ins.center;
        t.top_set = top_k(ex.fit, k, cfg.ranking);
        t.jaccard = jaccard(reference_top, t.top_set);
        if (on_trial) on_trial(t, ins, ex);
        report.per_trial_jaccard.push_back(t.jaccard);
        report.ball_centers.push_back(t.center);
        report.details.push_back(std::move(t));
    }
    if (report.per_trial_jaccard.size() < opts.trials)
        throw StabilityError("found only " + std::to_string(report.per_trial_jaccard.size()) + " of " +
                             std::to_string(opts.trials) + " prediction-preserving insertions in " +
                             std::to_string(max_attempts) + " attempts");
    report.trials = opts.trials;
    double s = 0;
    for (double j : report.per_trial_jaccard) s += j;
    report.mean_jaccard = s / static_cast<double>(report.trials);
    return report;
}

inline nlohmann::json to_json(const StabilityReport& r) {
    nlohmann::json centers = nlohmann::json::array();
    for (const auto& c : r.ball_centers) centers.push_back({c[0], c[1], c[2]});
    nlohmann::json top_sets = nlohmann::json::array();
    for (const auto& t : r.details) top_sets.push_back(t.top_set);
    return {{"trials", r.trials},
            {"per_trial_jaccard", r.per_trial_jaccard},
            {"mean_jaccard", r.mean_jaccard},
            {"ball_centers", std::move(centers)},
            {"radius", r.radius},
            {"discarded", r.discarded},
            {"reference_top_set", r.reference_top_set},
            {"trial_top_sets", std::move(top_sets)}};
}

}  // namespace smilepc
