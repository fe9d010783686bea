#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "smilepc/blackbox.hpp"
#include "smilepc/shapes.hpp"

using namespace smilepc;

namespace {

PointCloud rotate_z90(const PointCloud& c) {
    std::vector<Point3> pts;
    for (const auto& p : c) pts.push_back({-p[1], p[0], p[2]});
    return PointCloud(std::move(pts));
}

PointCloud shuffled(const PointCloud& c, std::uint64_t seed) {
    std::vector<Point3> pts = c.points();
    Rng rng(seed);
    for (std::size_t i = pts.size() - 1; i > 0; --i) std::swap(pts[i], pts[static_cast<std::size_t>(rng.index(i + 1))]);
    return PointCloud(std::move(pts));
}

}  // namespace

TEST(ToyClassifier, UnitSphereIsSphere) {
    ToyClassifier model;
    Rng rng(101);
    std::vector<Point3> pts;
    while (pts.size() < 2048) {
        Point3 d{rng.normal(), rng.normal(), rng.normal()};
        const double r = norm(d);
        pts.push_back({d[0] / r, d[1] / r, d[2] / r});
    }
    const auto out = model.classify_one(PointCloud(pts));
    EXPECT_EQ(model.descriptor().class_names[out.argmax()], "sphere");
}

TEST(ToyClassifier, ConfusionMatrixIsDiagonal) {
    ToyClassifier model;
    std::size_t correct = 0, total = 0;
    for (std::size_t s = 0; s < kToyShapes.size(); ++s) {
        for (std::uint64_t seed = 1; seed <= 25; ++seed) {
            const std::size_t n = seed % 2 ? 1024 : 2048;
            const auto out = model.classify_one(make_shape(kToyShapes[s], n, seed));
            correct += out.argmax() == s ? 1 : 0;
            ++total;
        }
    }
    EXPECT_GE(static_cast<double>(correct) / static_cast<double>(total), 0.95);
}

TEST(ToyClassifier, InvariantToQuarterTurnAboutZ) {
    ToyClassifier model;
    for (auto s : kToyShapes) {
        const auto c = make_shape(s, 1024, 7);
        const auto a = model.probabilities(c), b = model.probabilities(rotate_z90(c));
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-6);
    }
}

TEST(ToyClassifier, InvariantToPointOrder) {
    ToyClassifier model;
    for (auto s : kToyShapes) {
        const auto c = make_shape(s, 1024, 3);
        const auto a = model.probabilities(c), b = model.probabilities(shuffled(c, 9));
        for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9);
    }
}

TEST(ToyClassifier, DuplicatePaddingMovesProbabilitiesLittle) {
    ToyClassifier model;
    for (auto s : kToyShapes) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto base = make_shape(s, 512, seed);
            std::vector<Point3> padded = base.points();
            Rng rng(seed + 100);
            while (padded.size() < 1024) padded.push_back(base[static_cast<std::size_t>(rng.index(base.size()))]);
            const auto a = model.probabilities(base), b = model.probabilities(PointCloud(padded));
            for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LT(std::abs(a[k] - b[k]), 0.05) << shape_name(s);
        }
    }
}

TEST(ToyClassifier, DeterministicAndValid) {
    ToyClassifier model;
    const auto c = make_shape(ToyShape::Box, 700, 1);
    const auto a = model.classify_one(c), b = model.classify_one(c);
    EXPECT_EQ(a, b);
    EXPECT_FALSE(check_probabilities(a.probs, 4));
    EXPECT_EQ(model.descriptor().kind, ClassifierKind::Toy);
    EXPECT_FALSE(model.descriptor().serial_only);
}

TEST(ToyClassifier, BatchMatchesSingleCalls) {
    ToyClassifier model;
    std::vector<PointCloud> batch;
    for (auto s : kToyShapes) batch.push_back(make_shape(s, 300, 2));
    const auto out = model.classify(batch);
    ASSERT_EQ(out.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(out[k], model.classify_one(batch[k]));
}

TEST(ToyClassifier, SinglePointCloudIsHandled) {
    ToyClassifier model;
    const auto out = model.classify_one(PointCloud({{0.2, 0.1, 0.0}}));
    EXPECT_FALSE(check_probabilities(out.probs, 4));
}

TEST(CheckProbabilities, Rules) {
    EXPECT_FALSE(check_probabilities(std::vector<double>{0.25, 0.75}, 2));
    EXPECT_FALSE(check_probabilities(std::vector<double>{0.5, 0.5 + 5e-7}, 2));
    EXPECT_TRUE(check_probabilities(std::vector<double>{0.5, 0.6}, 2));
    EXPECT_TRUE(check_probabilities(std::vector<double>{1.2, -0.2}, 2));
    EXPECT_TRUE(check_probabilities(std::vector<double>{1.0}, 2));
    EXPECT_TRUE(check_probabilities(std::vector<double>{std::nan(""), 1.0}, 2));
}

TEST(FunctionClassifier, ReportsFailingRowInBatch) {
    FunctionClassifier model({"a", "b"}, [](const PointCloud& c) -> std::vector<double> {
        if (c.size() == 2) throw std::runtime_error("boom");
        return {0.5, 0.5};
    });
    std::vector<PointCloud> batch{PointCloud({{0, 0, 0}}), PointCloud({{0, 0, 0}}), PointCloud({{0, 0, 0}, {1, 1, 1}})};
    try {
        model.classify(batch);
        FAIL() << "expected ClassifierError";
    } catch (const ClassifierError& e) {
        EXPECT_EQ(e.row(), 2u);
    }
}

TEST(FunctionClassifier, NeedsTwoClasses) {
    EXPECT_THROW(FunctionClassifier({"only"}, [](const PointCloud&) { return std::vector<double>{1.0}; }),
                 InvalidArgument);
}
