#pragma once

// The black-box classifier abstraction and the built-in toy classifier.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "smilepc/error.hpp"
#include "smilepc/geometry.hpp"
#include "smilepc/shapes.hpp"

namespace smilepc {

/// One probability vector over the classifier's classes.
struct ClassifierOutput {
    std::vector<double> probs;

    std::size_t argmax() const {
        return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }
    friend bool operator==(const ClassifierOutput&, const ClassifierOutput&) = default;
};

inline constexpr double kProbabilitySumTolerance = 1e-6;

/// Reason the vector is not a probability distribution over `classes` entries, if any.
inline std::optional<std::string> check_probabilities(std::span<const double> probs, std::size_t classes) {
    if (probs.size() != classes)
        return "expected " + std::to_string(classes) + " probabilities, got " + std::to_string(probs.size());
    double sum = 0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0) return "probabilities must be finite and non-negative";
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance) return "probabilities sum to " + std::to_string(sum);
    return std::nullopt;
}

enum class ClassifierKind { Toy, Bridge, InProcess };

struct ClassifierDescriptor {
    ClassifierKind kind = ClassifierKind::InProcess;
    std::vector<std::string> class_names;
    std::size_t batch_limit = 64;
    /// Calls must not overlap; the engine then classifies batches one at a time.
    bool serial_only = false;

    std::size_t classes() const noexcept { return class_names.size(); }
};

class Classifier {
public:
    virtual ~Classifier() = default;
    virtual const ClassifierDescriptor& descriptor() const = 0;
    /// One output per input cloud, in order.
    virtual std::vector<ClassifierOutput> classify(std::span<const PointCloud> batch) = 0;

    ClassifierOutput classify_one(const PointCloud& cloud) {
        auto out = classify(std::span<const PointCloud>(&cloud, 1));
        if (out.size() != 1) throw ClassifierError("classifier returned " + std::to_string(out.size()) + " outputs", 0);
        return std::move(out.front());
    }
};

/// Wraps a per-cloud function. Concurrent-safe when the function is.
class FunctionClassifier final : public Classifier {
public:
    using Fn = std::function<std::vector<double>(const PointCloud&)>;

    FunctionClassifier(std::vector<std::string> class_names, Fn fn, bool serial_only = false)
        : fn_(std::move(fn)) {
        if (class_names.size() < 2) throw InvalidArgument("a classifier needs at least two classes");
        desc_.kind = ClassifierKind::InProcess;
        desc_.class_names = std::move(class_names);
        desc_.serial_only = serial_only;
    }

    const ClassifierDescriptor& descriptor() const override { return desc_; }

    std::vector<ClassifierOutput> classify(std::span<const PointCloud> batch) override {
        std::vector<ClassifierOutput> out;
        out.reserve(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
            try {
                out.push_back({fn_(batch[k])});
            } catch (const std::exception& e) {
                throw ClassifierError(e.what(), k);
            }
        }
        return out;
    }

private:
    ClassifierDescriptor desc_;
    Fn fn_;
};

/// Always answers the same probability vector.
inline FunctionClassifier constant_classifier(std::vector<double> probs) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < probs.size(); ++k) names.push_back("class" + std::to_string(k));
    return FunctionClassifier(std::move(names), [probs](const PointCloud&) { return probs; });
}

// ---------------------------------------------------------------------------
// Toy classifier

inline constexpr std::size_t kRadialBins = 8;
inline constexpr std::size_t kToyFeatureCount = 7 + kRadialBins;

using ToyFeatures = std::array<double, kToyFeatureCount>;

/// Geometric descriptor of a cloud, invariant to point order and to rotations
/// about z by multiples of 90 degrees:
///   [|mean_xy|, mean_z, max(sd_x, sd_y), min(sd_x, sd_y), sd_z,
///    l2/l1, l3/l1 (covariance eigenvalues, descending),
///    8-bin histogram of distance to centroid over [0, r_max]].
/// Computed over distinct points, so padding a cloud with copies of its own
/// points leaves the features unchanged.
inline ToyFeatures toy_features(const PointCloud& input) {
    if (input.empty()) throw InvalidArgument("toy classifier: empty cloud");
    std::vector<Point3> pts = input.points();
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const PointCloud cloud(std::move(pts));
    const double n = static_cast<double>(cloud.size());
    const Point3 c = cloud.centroid();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : cloud) {
        const Eigen::Vector3d d(p[0] - c[0], p[1] - c[1], p[2] - c[2]);
        cov += d * d.transpose();
    }
    cov /= n;

    ToyFeatures f{};
    f[0] = std::sqrt(c[0] * c[0] + c[1] * c[1]);
    f[1] = c[2];
    const double sx = std::sqrt(cov(0, 0)), sy = std::sqrt(cov(1, 1));
    f[2] = std::max(sx, sy);
    f[3] = std::min(sx, sy);
    f[4] = std::sqrt(cov(2, 2));

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov, Eigen::EigenvaluesOnly);
    const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
    const double l1 = std::max(ev(2), 0.0);
    f[5] = l1 > 0 ? std::max(ev(1), 0.0) / l1 : 1.0;
    f[6] = l1 > 0 ? std::max(ev(0), 0.0) / l1 : 1.0;

    std::vector<double> radius;
    radius.reserve(cloud.size());
    double r_max = 0;
    for (const auto& p : cloud) {
        radius.push_back(std::sqrt(squared_distance(p, c)));
        r_max = std::max(r_max, radius.back());
    }
    for (double r : radius) {
        const double u = r_max > 0 ? r / r_max : 0.0;
        const auto bin = std::min(kRadialBins - 1, static_cast<std::size_t>(u * kRadialBins));
        f[7 + bin] += 1.0 / n;
    }
    return f;
}

/// Softmax over negative feature distances to four shape prototypes.
class ToyClassifier final : public Classifier {
public:
    static constexpr double kTemperature = 0.1;
    static constexpr std::size_t kPrototypePoints = 2048;
    static constexpr std::uint64_t kPrototypeSeed = 20240501;

    ToyClassifier() {
        desc_.kind = ClassifierKind::Toy;
        for (auto s : kToyShapes) {
            desc_.class_names.emplace_back(shape_name(s));
            prototypes_.push_back(toy_features(make_shape(s, kPrototypePoints, kPrototypeSeed)));
        }
        desc_.batch_limit = 64;
        desc_.serial_only = false;
    }

    const ClassifierDescriptor& descriptor() const override { return desc_; }

    std::vector<double> probabilities(const PointCloud& cloud) const {
        const ToyFeatures f = toy_features(cloud);
        std::vector<double> logits;
        for (const auto& proto : prototypes_) {
            double d2 = 0;
            for (std::size_t i = 0; i < f.size(); ++i) d2 += (f[i] - proto[i]) * (f[i] - proto[i]);
            logits.push_back(-std::sqrt(d2) / kTemperature);
        }
        const double top = *std::max_element(logits.begin(), logits.end());
        double z = 0;
        for (auto& l : logits) z += (l = std::exp(l - top));
        for (auto& l : logits) l /= z;
        return logits;
    }

    std::vector<ClassifierOutput> classify(std::span<const PointCloud> batch) override {
        std::vector<ClassifierOutput> out;
        out.reserve(batch.size());
        for (const auto& cloud : batch) out.push_back({probabilities(cloud)});
        return out;
    }

    const std::vector<ToyFeatures>& prototypes() const noexcept { return prototypes_; }

private:
    ClassifierDescriptor desc_;
    std::vector<ToyFeatures> prototypes_;
};

}  // namespace smilepc
