#pragma once

// The explanation pipeline:
//   cluster -> mask -> realize -> classify -> distance -> kernel weight -> surrogate -> top clusters.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "json.hpp"
#include "smilepc/blackbox.hpp"
#include "smilepc/clustering.hpp"
#include "smilepc/error.hpp"
#include "smilepc/geometry.hpp"
#include "smilepc/perturb.hpp"
#include "smilepc/rng.hpp"
#include "smilepc/stats.hpp"
#include "smilepc/surrogate.hpp"

namespace smilepc {

struct ExplainConfig {
    std::size_t clusters = 32;
    std::size_t perturbations = 1000;
    double kernel_width = 0.5;
    DistanceKind distance = DistanceKind::Wasserstein;
    SurrogateKind surrogate = SurrogateKind::WeightedLeastSquares;
    double top_fraction = 0.2;
    Ranking ranking = Ranking::Signed;
    std::uint64_t seed = 0;
    std::optional<std::size_t> explained_class;

    void validate() const {
        if (clusters < 1) throw InvalidArgument("cluster count must be at least 1");
        if (perturbations < 2) throw InvalidArgument("perturbation count must be at least 2");
        if (!(kernel_width > 0) || !std::isfinite(kernel_width)) throw InvalidArgument("kernel width must be positive");
        if (!(top_fraction > 0 && top_fraction <= 1)) throw InvalidArgument("top fraction must be in (0, 1]");
    }
};

/// How the pipeline runs. Never changes the result.
struct ExecutionOptions {
    std::size_t threads = 1;
    std::size_t batch_size = 64;
};

struct ExplainTimings {
    double total_secs = 0;
    double clustering_secs = 0;
    /// Summed over workers.
    double realize_secs = 0;
    double classify_secs = 0;
    double distance_secs = 0;
    double fit_secs = 0;
};

struct Explanation {
    ExplainConfig config;
    ClusterModel cluster_model;
    MaskMatrix masks{0, 0};
    std::vector<double> distances;
    std::vector<double> weights;
    /// Black-box probability of the explained class for every mask row.
    std::vector<double> targets;
    SurrogateFit fit;
    std::vector<std::size_t> top_set;
    std::size_t explained_class = 0;
    std::vector<double> f_original;
    ExplainTimings timings;
};

/// exp(-d^2 / sigma^2). Underflows to 0 for d >> sigma.
inline double kernel_weight(double d, double sigma) {
    if (!(d >= 0)) throw InvalidArgument("distance must be non-negative");
    if (!(sigma > 0)) throw InvalidArgument("kernel width must be positive");
    return std::exp(-(d * d) / (sigma * sigma));
}

inline constexpr double kDegenerateWeight = 1e-300;

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace detail

/// Explains `model`'s prediction on `cloud` over a fixed super-point model.
/// The classifier is invoked on exactly `cfg.perturbations` clouds.
inline Explanation explain_with_clusters(const PointCloud& cloud, Classifier& model, const ExplainConfig& cfg,
                                         ClusterModel clusters, const ExecutionOptions& exec = {}) {
    const auto t_start = detail::Clock::now();
    cfg.validate();
    if (cloud.empty()) throw InvalidArgument("cannot explain an empty cloud");
    if (clusters.assignment.size() != cloud.size()) throw InvalidArgument("cluster model does not cover the cloud");

    const ClassifierDescriptor& desc = model.descriptor();
    const std::size_t classes = desc.classes();
    if (cfg.explained_class && *cfg.explained_class >= classes)
        throw InvalidArgument("explained class " + std::to_string(*cfg.explained_class) + " out of range");

    Explanation ex;
    ex.config = cfg;
    ex.config.clusters = clusters.c;
    ex.cluster_model = std::move(clusters);
    const ClusterModel& cm = ex.cluster_model;
    const std::size_t np = cfg.perturbations;

    ex.masks = generate_masks(np, cm.c, derive_seed(cfg.seed, "perturb"));
    ex.distances.assign(np, 0.0);
    std::vector<std::vector<double>> probs(np);

    const std::size_t batch = std::max<std::size_t>(1, std::min(exec.batch_size, std::max<std::size_t>(1, desc.batch_limit)));
    const std::size_t n_batches = (np + batch - 1) / batch;
    std::atomic<std::size_t> next_batch{0};
    std::mutex classify_mutex, error_mutex;
    std::optional<std::size_t> failed_batch;
    std::exception_ptr failure;
    std::atomic<std::int64_t> realize_ns{0}, classify_ns{0}, distance_ns{0};

    auto add_ns = [](std::atomic<std::int64_t>& acc, detail::Clock::time_point t0) {
        acc += std::chrono::duration_cast<std::chrono::nanoseconds>(detail::Clock::now() - t0).count();
    };

    auto worker = [&] {
        std::vector<PointCloud> realized;
        for (;;) {
            const std::size_t b = next_batch.fetch_add(1);
            if (b >= n_batches) return;
            const std::size_t lo = b * batch, hi = std::min(np, lo + batch);
            try {
                auto t0 = detail::Clock::now();
                realized.clear();
                for (std::size_t i = lo; i < hi; ++i)
                    realized.push_back(realize(cloud, cm, ex.masks.row(i), cloud.size(), derive_seed(cfg.seed, "realize", i)));
                add_ns(realize_ns, t0);

                t0 = detail::Clock::now();
                std::vector<ClassifierOutput> out;
                try {
                    if (desc.serial_only) {
                        std::lock_guard lock(classify_mutex);
                        out = model.classify(realized);
                    } else {
                        out = model.classify(realized);
                    }
                } catch (const ClassifierError& e) {
                    // Classifiers report rows relative to the batch.
                    throw ClassifierError(e.what(), lo + e.row());
                } catch (const Error&) {
                    throw;
                } catch (const std::exception& e) {
                    throw ClassifierError(e.what(), lo);
                }
                add_ns(classify_ns, t0);
                if (out.size() != realized.size())
                    throw ClassifierError("classifier returned " + std::to_string(out.size()) + " outputs for " +
                                              std::to_string(realized.size()) + " clouds",
                                          lo);
                for (std::size_t k = 0; k < out.size(); ++k) {
                    if (auto why = check_probabilities(out[k].probs, classes)) throw ClassifierError(*why, lo + k);
                    probs[lo + k] = std::move(out[k].probs);
                }

                t0 = detail::Clock::now();
                for (std::size_t i = lo; i < hi; ++i)
                    ex.distances[i] = i == 0 ? 0.0 : cloud_distance(cfg.distance, cloud, realized[i - lo], ex.masks.row(i));
                add_ns(distance_ns, t0);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!failed_batch || b < *failed_batch) {
                    failed_batch = b;
                    failure = std::current_exception();
                }
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(exec.threads, n_batches));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    ex.f_original = probs[0];
    ex.explained_class = cfg.explained_class.value_or(
        static_cast<std::size_t>(std::max_element(ex.f_original.begin(), ex.f_original.end()) - ex.f_original.begin()));
    ex.config.explained_class = ex.explained_class;

    ex.targets.resize(np);
    ex.weights.resize(np);
    bool any_weight = false;
    for (std::size_t i = 0; i < np; ++i) {
        ex.targets[i] = probs[i][ex.explained_class];
        ex.weights[i] = kernel_weight(ex.distances[i], cfg.kernel_width);
        any_weight = any_weight || ex.weights[i] >= kDegenerateWeight;
    }
    if (!any_weight)
        throw DegenerateWeightsError("every kernel weight is below 1e-300; increase the kernel width");

    const auto t_fit = detail::Clock::now();
    ex.fit = fit_surrogate(cfg.surrogate, ex.masks, ex.targets, ex.weights);
    ex.top_set = top_clusters(ex.fit, cfg.top_fraction, cfg.ranking);
    ex.timings.fit_secs = detail::seconds_since(t_fit);

    ex.timings.realize_secs = static_cast<double>(realize_ns.load()) * 1e-9;
    ex.timings.classify_secs = static_cast<double>(classify_ns.load()) * 1e-9;
    ex.timings.distance_secs = static_cast<double>(distance_ns.load()) * 1e-9;
    ex.timings.total_secs = detail::seconds_since(t_start);
    return ex;
}

/// Full pipeline: FPS-seeded k-means super-points, then `explain_with_clusters`.
inline Explanation explain(const PointCloud& cloud, Classifier& model, const ExplainConfig& cfg,
                           const ExecutionOptions& exec = {}) {
    cfg.validate();
    const auto t0 = detail::Clock::now();
    ClusterModel clusters = kmeans(cloud, cfg.clusters, derive_seed(cfg.seed, "clusters"));
    const double clustering = detail::seconds_since(t0);
    Explanation ex = explain_with_clusters(cloud, model, cfg, std::move(clusters), exec);
    ex.timings.clustering_secs = clustering;
    ex.timings.total_secs += clustering;
    return ex;
}

/// Marks the points whose cluster is in `top_set`.
inline SaliencyCloud saliency(const ClusterModel& clusters, const std::vector<std::size_t>& top_set,
                              const PointCloud& cloud) {
    if (clusters.assignment.size() != cloud.size()) throw InvalidArgument("cluster model does not cover the cloud");
    std::vector<bool> chosen(clusters.c, false);
    for (auto k : top_set) {
        if (k >= clusters.c) throw InvalidArgument("top cluster index out of range");
        chosen[k] = true;
    }
    SaliencyCloud s{cloud, clusters.assignment, {}};
    s.is_salient.reserve(cloud.size());
    for (auto a : clusters.assignment) s.is_salient.push_back(chosen[a]);
    return s;
}

inline SaliencyCloud saliency(const Explanation& ex, const PointCloud& cloud) {
    return saliency(ex.cluster_model, ex.top_set, cloud);
}

inline nlohmann::json to_json(const ExplainConfig& cfg) {
    nlohmann::json j{{"clusters", cfg.clusters},
                     {"perturbations", cfg.perturbations},
                     {"kernel_width", cfg.kernel_width},
                     {"distance", distance_name(cfg.distance)},
                     {"surrogate", surrogate_name(cfg.surrogate)},
                     {"top_fraction", cfg.top_fraction},
                     {"ranking", cfg.ranking == Ranking::Signed ? "signed" : "absolute"},
                     {"seed", cfg.seed}};
    j["explained_class"] = cfg.explained_class ? nlohmann::json(*cfg.explained_class) : nlohmann::json(nullptr);
    return j;
}

/// Machine-readable explanation. Timings are excluded so the document is a
/// pure function of (cloud, model, config).
inline nlohmann::json to_json(const Explanation& ex) {
    return {{"config", to_json(ex.config)},
            {"explained_class", ex.explained_class},
            {"f_original", ex.f_original},
            {"distances", ex.distances},
            {"weights", ex.weights},
            {"targets", ex.targets},
            {"surrogate", surrogate_name(ex.fit.kind)},
            {"intercept", ex.fit.intercept},
            {"coefficients", ex.fit.coefficients},
            {"top_set", ex.top_set},
            {"clusters", to_json(ex.cluster_model)}};
}

}  // namespace smilepc
