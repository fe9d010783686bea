#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "smilepc/shapes.hpp"
#include "smilepc/stability.hpp"

using namespace smilepc;

namespace {

bool in_unit_cube(const Point3& p) {
    return std::abs(p[0]) <= 1 && std::abs(p[1]) <= 1 && std::abs(p[2]) <= 1;
}

// Linear in the set of distinct points inside [-1, 1]^3, blind to everything
// outside it. Per-point weights vary with x so clusters differ in importance.
FunctionClassifier cube_reader(const PointCloud& reference) {
    double total = 0;
    for (const auto& p : reference)
        if (in_unit_cube(p)) total += 2 + p[0];
    return FunctionClassifier({"a", "b"}, [total](const PointCloud& c) {
        std::set<Point3> seen;
        for (const auto& p : c)
            if (in_unit_cube(p)) seen.insert(p);
        double s = 0;
        for (const auto& p : seen) s += 2 + p[0];
        const double p0 = 0.1 + 0.8 * s / total;
        return std::vector<double>{p0, 1 - p0};
    });
}

ExplainConfig small_config(std::size_t c = 16, std::size_t np = 200) {
    ExplainConfig cfg;
    cfg.clusters = c;
    cfg.perturbations = np;
    cfg.seed = 13;
    return cfg;
}

}  // namespace

TEST(Jaccard, Examples) {
    using S = std::vector<std::size_t>;
    EXPECT_EQ(jaccard(S{1, 2, 3}, S{1, 2, 3}), 1.0);
    EXPECT_EQ(jaccard(S{1, 2, 3}, S{2, 3, 4}), 0.5);
    EXPECT_EQ(jaccard(S{1}, S{2}), 0.0);
    EXPECT_EQ(jaccard(S{}, S{}), 1.0);
    EXPECT_EQ(jaccard(S{3, 1}, S{1, 3}), 1.0);
}

TEST(InsertBall, AppendsOneCluster) {
    const auto cloud = make_shape(ToyShape::Cross, 256, 1);
    const auto model = kmeans(cloud, 8, 1);
    const auto ins = insert_ball(cloud, model, 30, 0.1, 5);
    ASSERT_EQ(ins.cloud.size(), 286u);
    EXPECT_EQ(ins.ball_cluster, 8u);
    EXPECT_EQ(ins.clusters.c, 9u);
    for (std::size_t i = 0; i < 256; ++i) {
        EXPECT_EQ(ins.cloud[i], cloud[i]);
        EXPECT_EQ(ins.clusters.assignment[i], model.assignment[i]);
    }
    EXPECT_TRUE(std::find(cloud.begin(), cloud.end(), ins.center) != cloud.end());
    for (std::size_t i = 256; i < 286; ++i) {
        EXPECT_EQ(ins.clusters.assignment[i], 8u);
        EXPECT_LE(std::sqrt(squared_distance(ins.cloud[i], ins.center)), 0.1);
    }
}

TEST(InsertBall, ZeroRadiusStacksPointsOnCenter) {
    const auto cloud = make_shape(ToyShape::Box, 100, 2);
    const auto ins = insert_ball(cloud, kmeans(cloud, 4, 0), 30, 0.0, 9);
    for (std::size_t i = 100; i < 130; ++i) EXPECT_EQ(ins.cloud[i], ins.center);
}

TEST(InsertBall, CentersComeFromCandidates) {
    const auto cloud = make_shape(ToyShape::Box, 100, 2);
    const auto model = kmeans(cloud, 4, 0);
    const std::vector<std::size_t> only{17};
    for (std::uint64_t s = 0; s < 5; ++s) EXPECT_EQ(insert_ball(cloud, model, 5, 0.1, s, only).center, cloud[17]);
}

TEST(Stability, ReportShapeAndDeterminism) {
    ToyClassifier model;
    const auto cloud = make_shape(ToyShape::Cross, 512, 2);
    StabilityOptions opts;
    opts.trials = 3;
    opts.seed = 4;
    const auto a = stability_run(cloud, model, small_config(), opts);
    ASSERT_EQ(a.per_trial_jaccard.size(), 3u);
    ASSERT_EQ(a.ball_centers.size(), 3u);
    double s = 0;
    for (double j : a.per_trial_jaccard) {
        EXPECT_GE(j, 0.0);
        EXPECT_LE(j, 1.0);
        s += j;
    }
    EXPECT_DOUBLE_EQ(a.mean_jaccard, s / 3);
    EXPECT_NEAR(a.radius, 0.05 * bounding_diagonal(cloud), 1e-15);
    EXPECT_EQ(a.reference_top_set.size(), top_count(0.2, 16));

    const auto b = stability_run(cloud, model, small_config(), opts);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Stability, CountedTrialsKeepThePrediction) {
    ToyClassifier model;
    const auto cloud = make_shape(ToyShape::Plate, 512, 2);
    const auto label = model.classify_one(cloud).argmax();
    StabilityOptions opts;
    opts.trials = 3;
    opts.radius = 0.3;
    std::size_t seen = 0;
    stability_run(cloud, model, small_config(), opts, {},
                  [&](const StabilityTrial& t, const BallInsertion& ins, const Explanation& ex) {
                      ++seen;
                      EXPECT_EQ(model.classify_one(ins.cloud).argmax(), label);
                      EXPECT_EQ(ex.explained_class, label);
                      EXPECT_EQ(t.top_set.size(), top_count(0.2, 16));
                  });
    EXPECT_EQ(seen, 3u);
}

TEST(Stability, FarBallLeavesTopSetUnchanged) {
    // Anchor points outside the unit cube give the ball somewhere to sit where
    // the classifier cannot see it.
    auto pts = make_shape(ToyShape::Cross, 512, 3).points();
    const std::size_t first_anchor = pts.size();
    for (int i = 0; i < 4; ++i) pts.push_back({3.0 + 0.01 * i, 3.0, 3.0});
    const PointCloud cloud(pts);
    auto model = cube_reader(cloud);

    StabilityOptions opts;
    opts.trials = 1;
    opts.radius = 0.2;
    opts.center_candidates = {first_anchor, first_anchor + 1, first_anchor + 2, first_anchor + 3};
    const auto report = stability_run(cloud, model, small_config(), opts);
    ASSERT_EQ(report.per_trial_jaccard.size(), 1u);
    EXPECT_EQ(report.per_trial_jaccard[0], 1.0);
    EXPECT_EQ(report.discarded, 0u);
}

TEST(Stability, BallInDecisiveRegionEntersTopSet) {
    const auto cloud = make_shape(ToyShape::Cross, 512, 5);
    const Point3 hot = cloud[0];
    const double region = 0.2;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (std::sqrt(squared_distance(cloud[i], hot)) <= region - 0.05) candidates.push_back(i);
    std::size_t inside = 0;
    for (const auto& p : cloud) inside += std::sqrt(squared_distance(p, hot)) <= region ? 1 : 0;
    ASSERT_LT(inside, 30u);

    // Three classes; class 0 gains with every distinct point near `hot`.
    FunctionClassifier model({"hot", "cold", "other"}, [hot, region](const PointCloud& c) {
        std::set<Point3> seen;
        for (const auto& p : c)
            if (std::sqrt(squared_distance(p, hot)) <= region) seen.insert(p);
        const double s = std::min(1.0, static_cast<double>(seen.size()) / 120.0);
        const double p0 = 0.45 + 0.5 * s;
        return std::vector<double>{p0, 0.6 * (1 - p0), 0.4 * (1 - p0)};
    });

    StabilityOptions opts;
    opts.trials = 1;
    opts.radius = 0.05;
    opts.center_candidates = candidates;
    std::vector<std::size_t> trial_top;
    std::size_t ball_id = 0;
    const auto report = stability_run(cloud, model, small_config(), opts, {},
                                      [&](const StabilityTrial& t, const BallInsertion& ins, const Explanation&) {
                                          trial_top = t.top_set;
                                          ball_id = ins.ball_cluster;
                                      });
    EXPECT_TRUE(std::find(trial_top.begin(), trial_top.end(), ball_id) != trial_top.end());
    EXPECT_LT(report.per_trial_jaccard[0], 1.0);
}

TEST(Stability, GivesUpWhenEveryInsertionFlipsThePrediction) {
    const auto cloud = make_shape(ToyShape::Box, 200, 1);
    FunctionClassifier model({"a", "b"}, [n = cloud.size()](const PointCloud& c) {
        return c.size() > n ? std::vector<double>{0.1, 0.9} : std::vector<double>{0.9, 0.1};
    });
    StabilityOptions opts;
    opts.trials = 2;
    try {
        stability_run(cloud, model, small_config(8, 50), opts);
        FAIL() << "expected StabilityError";
    } catch (const StabilityError&) {
    }
}

TEST(Stability, RejectsZeroTrials) {
    ToyClassifier model;
    StabilityOptions opts;
    opts.trials = 0;
    EXPECT_THROW(stability_run(make_shape(ToyShape::Box, 100, 1), model, small_config(8, 50), opts), InvalidArgument);
}
