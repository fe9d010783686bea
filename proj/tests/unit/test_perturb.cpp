#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "smilepc/perturb.hpp"
#include "smilepc/shapes.hpp"

using namespace smilepc;

namespace {

// Two clusters split by x: points with index < n0 go to cluster 0.
std::pair<PointCloud, ClusterModel> split_cloud(std::size_t n0, std::size_t n1) {
    Rng rng(12);
    std::vector<Point3> pts;
    ClusterModel m;
    m.c = 2;
    for (std::size_t i = 0; i < n0 + n1; ++i) {
        const double x = i < n0 ? rng.uniform(-2, -1) : rng.uniform(1, 2);
        pts.push_back({x, rng.uniform(-1, 1), rng.uniform(-1, 1)});
        m.assignment.push_back(i < n0 ? 0 : 1);
    }
    m.centroids = {{-1.5, 0, 0}, {1.5, 0, 0}};
    return {PointCloud(std::move(pts)), m};
}

}  // namespace

TEST(Masks, SmallestCase) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = generate_masks(2, 3, seed);
        EXPECT_EQ(m.popcount(0), 3u);
        EXPECT_GE(m.popcount(1), 1u);
    }
}

TEST(Masks, FairCoinRate) {
    const auto m = generate_masks(20001, 16, 99);
    double ones = 0;
    for (std::size_t i = 1; i < m.rows(); ++i) ones += static_cast<double>(m.popcount(i));
    EXPECT_NEAR(ones / (20000.0 * 16), 0.5, 0.01);
}

TEST(Masks, NoZeroRowsEvenForOneCluster) {
    const auto m = generate_masks(500, 1, 3);
    for (std::size_t i = 0; i < m.rows(); ++i) EXPECT_EQ(m(i, 0), 1);
}

TEST(Masks, EntriesAreBinaryAndRowsNonEmpty) {
    const auto m = generate_masks(300, 5, 8);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        EXPECT_GE(m.popcount(i), 1u);
        for (auto b : m.row(i)) EXPECT_TRUE(b == 0 || b == 1);
    }
}

TEST(Masks, Deterministic) {
    EXPECT_EQ(generate_masks(64, 8, 5), generate_masks(64, 8, 5));
    EXPECT_FALSE(generate_masks(64, 8, 5) == generate_masks(64, 8, 6));
}

TEST(Masks, JsonShape) {
    const auto j = to_json(generate_masks(3, 2, 0));
    EXPECT_EQ(j["np"], 3);
    EXPECT_EQ(j["c"], 2);
    EXPECT_EQ(j["rows"][0], nlohmann::json({1, 1}));
}

TEST(Realize, AllOnesIsIdentity) {
    const auto [cloud, m] = split_cloud(600, 424);
    const std::vector<std::uint8_t> ones{1, 1};
    EXPECT_EQ(realize(cloud, m, ones, cloud.size(), 5), cloud);
}

TEST(Realize, PadsFromRetainedCluster) {
    const auto [cloud, m] = split_cloud(600, 424);
    const std::vector<std::uint8_t> mask{1, 0};
    const auto out = realize(cloud, m, mask, 1024, 7);
    ASSERT_EQ(out.size(), 1024u);
    std::set<Point3> cluster0;
    for (auto i : m.members(0)) cluster0.insert(cloud[i]);
    std::set<Point3> distinct;
    for (const auto& p : out) {
        EXPECT_TRUE(cluster0.count(p));
        distinct.insert(p);
    }
    EXPECT_EQ(distinct.size(), 600u);
}

TEST(Realize, SinglePointClusterIsCopied) {
    std::vector<Point3> pts{{9, 9, 9}};
    ClusterModel m;
    m.c = 2;
    m.assignment = {0};
    for (int i = 0; i < 50; ++i) {
        pts.push_back({0, 0, static_cast<double>(i)});
        m.assignment.push_back(1);
    }
    const PointCloud cloud(pts);
    const std::vector<std::uint8_t> mask{1, 0};
    const auto out = realize(cloud, m, mask, 1024, 3);
    ASSERT_EQ(out.size(), 1024u);
    for (const auto& p : out) EXPECT_EQ(p, (Point3{9, 9, 9}));
}

TEST(Realize, MembershipPropertyOnRandomMasks) {
    const auto cloud = make_shape(ToyShape::Cross, 512, 2);
    ClusterModel m;
    m.c = 8;
    for (std::size_t i = 0; i < cloud.size(); ++i) m.assignment.push_back(i % 8);
    m.centroids.assign(8, Point3{0, 0, 0});
    const auto masks = generate_masks(40, 8, 1);
    for (std::size_t r = 0; r < masks.rows(); ++r) {
        const auto out = realize(cloud, m, masks.row(r), cloud.size(), derive_seed(1, "realize", r));
        ASSERT_EQ(out.size(), cloud.size());
        std::set<Point3> retained, distinct;
        for (std::size_t i = 0; i < cloud.size(); ++i)
            if (masks(r, m.assignment[i])) retained.insert(cloud[i]);
        for (const auto& p : out) {
            ASSERT_TRUE(retained.count(p));
            distinct.insert(p);
        }
        EXPECT_LE(distinct.size(), retained.size());
    }
}

TEST(Realize, DeterministicPerSeed) {
    const auto [cloud, m] = split_cloud(100, 50);
    const std::vector<std::uint8_t> mask{0, 1};
    EXPECT_EQ(realize(cloud, m, mask, 150, 4), realize(cloud, m, mask, 150, 4));
}

TEST(Realize, RejectsAllZeroAndBadLength) {
    const auto [cloud, m] = split_cloud(10, 10);
    const std::vector<std::uint8_t> zeros{0, 0}, short_row{1};
    EXPECT_THROW(realize(cloud, m, zeros, 20, 0), InvalidArgument);
    EXPECT_THROW(realize(cloud, m, short_row, 20, 0), InvalidArgument);
}
