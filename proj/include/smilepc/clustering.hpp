#pragma once

// Super-point construction: farthest point sampling seeds Lloyd's k-means.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "json.hpp"
#include "smilepc/error.hpp"
#include "smilepc/geometry.hpp"
#include "smilepc/rng.hpp"

namespace smilepc {

/// Per-point super-point assignment with centroids.
/// Every cluster owns at least one point and each point sits with its nearest centroid.
struct ClusterModel {
    std::size_t c = 0;
    std::vector<std::size_t> assignment;
    std::vector<Point3> centroids;
    double sse = 0;

    /// SSE after every assignment and every mean update, in order. Not serialized.
    std::vector<double> sse_history;
    std::size_t iterations = 0;

    std::vector<std::size_t> cluster_sizes() const {
        std::vector<std::size_t> sizes(c, 0);
        for (auto a : assignment) ++sizes[a];
        return sizes;
    }

    /// Indices of the points assigned to cluster `k`, ascending.
    std::vector<std::size_t> members(std::size_t k) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < assignment.size(); ++i)
            if (assignment[i] == k) out.push_back(i);
        return out;
    }
};

inline double total_sse(const PointCloud& cloud, const std::vector<std::size_t>& assignment,
                        const std::vector<Point3>& centroids) {
    double s = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) s += squared_distance(cloud[i], centroids[assignment[i]]);
    return s;
}

/// Greedy farthest point sampling from a fixed first index. Ties go to the smaller index.
inline std::vector<std::size_t> farthest_point_sample_from(const PointCloud& cloud, std::size_t k,
                                                           std::size_t start) {
    if (k == 0) throw InvalidArgument("sample count must be positive");
    if (k > cloud.size()) throw InvalidArgument("cannot select more points than the cloud holds");
    if (start >= cloud.size()) throw InvalidArgument("start index out of range");

    std::vector<std::size_t> picked{start};
    picked.reserve(k);
    std::vector<double> nearest(cloud.size(), std::numeric_limits<double>::infinity());
    std::vector<bool> taken(cloud.size(), false);
    taken[start] = true;
    std::size_t last = start;
    while (picked.size() < k) {
        std::size_t best = cloud.size();
        double best_d = -1;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            if (taken[i]) continue;
            nearest[i] = std::min(nearest[i], squared_distance(cloud[i], cloud[last]));
            if (nearest[i] > best_d) {
                best_d = nearest[i];
                best = i;
            }
        }
        taken[best] = true;
        picked.push_back(best);
        last = best;
    }
    return picked;
}

/// Farthest point sampling whose first index is drawn uniformly from `seed`.
inline std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t k, std::uint64_t seed) {
    if (cloud.empty()) throw InvalidArgument("empty cloud");
    Rng rng(derive_seed(seed, "fps"));
    return farthest_point_sample_from(cloud, k, static_cast<std::size_t>(rng.index(cloud.size())));
}

struct KMeansOptions {
    std::size_t max_iterations = 100;
    double sse_tolerance = 1e-9;
};

namespace detail {

/// Nearest-centroid assignment; returns whether anything changed.
inline bool assign_nearest(const PointCloud& cloud, const std::vector<Point3>& centroids,
                           std::vector<std::size_t>& assignment) {
    bool changed = false;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        std::size_t best = 0;
        double best_d = squared_distance(cloud[i], centroids[0]);
        for (std::size_t k = 1; k < centroids.size(); ++k) {
            const double d = squared_distance(cloud[i], centroids[k]);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (assignment[i] != best) {
            assignment[i] = best;
            changed = true;
        }
    }
    return changed;
}

/// Each empty cluster seizes the point farthest from its centroid among clusters
/// with two or more members. Returns whether any repair happened.
inline bool repair_empty(const PointCloud& cloud, std::vector<Point3>& centroids,
                         std::vector<std::size_t>& assignment) {
    std::vector<std::size_t> sizes(centroids.size(), 0);
    for (auto a : assignment) ++sizes[a];
    bool repaired = false;
    for (std::size_t k = 0; k < centroids.size(); ++k) {
        if (sizes[k] != 0) continue;
        std::size_t victim = cloud.size();
        double far = -1;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            if (sizes[assignment[i]] < 2) continue;
            const double d = squared_distance(cloud[i], centroids[assignment[i]]);
            if (d > far) {
                far = d;
                victim = i;
            }
        }
        --sizes[assignment[victim]];
        assignment[victim] = k;
        sizes[k] = 1;
        centroids[k] = cloud[victim];
        repaired = true;
    }
    return repaired;
}

inline void update_means(const PointCloud& cloud, const std::vector<std::size_t>& assignment,
                         std::vector<Point3>& centroids) {
    std::vector<Point3> sum(centroids.size(), Point3{0, 0, 0});
    std::vector<std::size_t> count(centroids.size(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (std::size_t a = 0; a < 3; ++a) sum[assignment[i]][a] += cloud[i][a];
        ++count[assignment[i]];
    }
    for (std::size_t k = 0; k < centroids.size(); ++k)
        for (std::size_t a = 0; a < 3; ++a) centroids[k][a] = sum[k][a] / static_cast<double>(count[k]);
}

}  // namespace detail

/// Lloyd's k-means with FPS-selected initial centroids.
/// Stops at an assignment fixpoint, after `max_iterations`, or when an update
/// improves SSE by less than `sse_tolerance` (the run then ends on an
/// assignment step, so every point keeps its nearest centroid).
inline ClusterModel kmeans(const PointCloud& cloud, std::size_t c, std::uint64_t seed, KMeansOptions opts = {}) {
    if (c == 0) throw InvalidArgument("cluster count must be positive");
    if (c > cloud.size()) throw InvalidArgument("cluster count exceeds point count");

    ClusterModel m;
    m.c = c;
    for (auto idx : farthest_point_sample(cloud, c, seed)) m.centroids.push_back(cloud[idx]);
    m.assignment.assign(cloud.size(), c);  // sentinel: first assignment always "changes"

    bool stop_after_assign = false;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        m.iterations = it + 1;
        const bool changed = detail::assign_nearest(cloud, m.centroids, m.assignment);
        const bool repaired = detail::repair_empty(cloud, m.centroids, m.assignment);
        m.sse = total_sse(cloud, m.assignment, m.centroids);
        m.sse_history.push_back(m.sse);
        if (!changed && !repaired) break;
        if ((stop_after_assign || it + 1 == opts.max_iterations) && !repaired) break;

        detail::update_means(cloud, m.assignment, m.centroids);
        const double after = total_sse(cloud, m.assignment, m.centroids);
        m.sse_history.push_back(after);
        m.sse = after;
        if (prev - after < opts.sse_tolerance) stop_after_assign = true;
        prev = after;
    }
    return m;
}

inline nlohmann::json to_json(const ClusterModel& m) {
    nlohmann::json centroids = nlohmann::json::array();
    for (const auto& p : m.centroids) centroids.push_back({p[0], p[1], p[2]});
    return {{"c", m.c}, {"assignment", m.assignment}, {"centroids", std::move(centroids)}, {"sse", m.sse}};
}

}  // namespace smilepc
