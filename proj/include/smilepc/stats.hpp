#pragma once

// Empirical CDFs and the instance-to-perturbation distances: cosine on mask
// rows (LIME) and three ECDF statistics on coordinate samples (SMILE).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smilepc/error.hpp"
#include "smilepc/geometry.hpp"

namespace smilepc {

/// Empirical CDF of a finite sample: F(x) = #{v <= x} / n.
class Ecdf {
public:
    explicit Ecdf(std::span<const double> sample) : values_(sample.begin(), sample.end()) {
        if (values_.empty()) throw InvalidArgument("ECDF of an empty sample");
        std::sort(values_.begin(), values_.end());
    }

    double operator()(double x) const {
        const auto it = std::upper_bound(values_.begin(), values_.end(), x);
        return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
    }

    std::size_t n() const noexcept { return values_.size(); }
    const std::vector<double>& sorted_values() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

enum class DistanceKind { Cosine, Wasserstein, KolmogorovSmirnov, AndersonDarling };

inline std::string_view distance_name(DistanceKind k) {
    switch (k) {
        case DistanceKind::Cosine: return "cosine";
        case DistanceKind::Wasserstein: return "wd";
        case DistanceKind::KolmogorovSmirnov: return "ks";
        case DistanceKind::AndersonDarling: return "ad";
    }
    return "?";
}

inline std::optional<DistanceKind> parse_distance(std::string_view s) {
    for (auto k : {DistanceKind::Cosine, DistanceKind::Wasserstein, DistanceKind::KolmogorovSmirnov,
                   DistanceKind::AndersonDarling})
        if (distance_name(k) == s) return k;
    return std::nullopt;
}

namespace detail {

inline std::vector<double> sorted_copy(std::span<const double> s, const char* what) {
    if (s.empty()) throw InvalidArgument(std::string(what) + ": empty sample");
    std::vector<double> v(s.begin(), s.end());
    std::sort(v.begin(), v.end());
    return v;
}

// Sweeps the pooled breakpoints of two sorted samples, calling
// visit(x, next_x, Fa(x), Fb(x)) for each distinct breakpoint x.
template <typename Visit>
void sweep_ecdfs(const std::vector<double>& a, const std::vector<double>& b, Visit&& visit) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        double x;
        if (j >= b.size() || (i < a.size() && a[i] <= b[j])) x = a[i];
        else x = b[j];
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        double next;
        if (i < a.size() && j < b.size()) next = std::min(a[i], b[j]);
        else if (i < a.size()) next = a[i];
        else if (j < b.size()) next = b[j];
        else next = x;
        visit(x, next, static_cast<double>(i) / na, static_cast<double>(j) / nb);
    }
}

}  // namespace detail

/// 1-D Wasserstein-1: exact integral of |Fa - Fb| over the pooled breakpoints.
inline double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
    const auto sa = detail::sorted_copy(a, "wasserstein_1d");
    const auto sb = detail::sorted_copy(b, "wasserstein_1d");
    double total = 0;
    detail::sweep_ecdfs(sa, sb, [&](double x, double next, double fa, double fb) {
        total += std::abs(fa - fb) * (next - x);
    });
    return total;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |Fa - Fb|.
inline double ks_distance(std::span<const double> a, std::span<const double> b) {
    const auto sa = detail::sorted_copy(a, "ks_distance");
    const auto sb = detail::sorted_copy(b, "ks_distance");
    double sup = 0;
    detail::sweep_ecdfs(sa, sb, [&](double, double, double fa, double fb) { sup = std::max(sup, std::abs(fa - fb)); });
    return sup;
}

/// Two-sample Anderson-Darling statistic
///   A^2 = 1/(n m) * sum_{j=1}^{N-1} (M_j N - n j)^2 / (j (N - j)),
/// M_j = number of `a` elements among the j smallest pooled values. Equal
/// values are ordered with `a` elements first.
inline double anderson_darling(std::span<const double> a, std::span<const double> b) {
    const auto sa = detail::sorted_copy(a, "anderson_darling");
    const auto sb = detail::sorted_copy(b, "anderson_darling");
    const double n = static_cast<double>(sa.size()), m = static_cast<double>(sb.size());
    const std::size_t total = sa.size() + sb.size();
    const double big_n = static_cast<double>(total);
    double sum = 0;
    std::size_t i = 0, k = 0;
    for (std::size_t j = 1; j < total; ++j) {
        if (k >= sb.size() || (i < sa.size() && sa[i] <= sb[k])) ++i;
        else ++k;
        const double jj = static_cast<double>(j);
        const double dev = static_cast<double>(i) * big_n - n * jj;
        sum += dev * dev / (jj * (big_n - jj));
    }
    return sum / (n * m);
}

/// 1 - cos(mask, 1) = 1 - sqrt(s / C), s = number of ones.
inline double cosine_mask_distance(std::span<const std::uint8_t> mask_row) {
    if (mask_row.empty()) throw InvalidArgument("empty mask row");
    std::size_t s = 0;
    for (auto b : mask_row) s += b ? 1 : 0;
    if (s == 0) throw InvalidArgument("cosine distance of an all-zero mask row");
    if (s == mask_row.size()) return 0.0;
    return 1.0 - std::sqrt(static_cast<double>(s) / static_cast<double>(mask_row.size()));
}

/// Per-axis ECDF distance between two coordinate samples.
inline double ecdf_distance(DistanceKind kind, std::span<const double> a, std::span<const double> b) {
    switch (kind) {
        case DistanceKind::Wasserstein: return wasserstein_1d(a, b);
        case DistanceKind::KolmogorovSmirnov: return ks_distance(a, b);
        case DistanceKind::AndersonDarling: return anderson_darling(a, b);
        case DistanceKind::Cosine: break;
    }
    throw InvalidArgument("cosine is not an ECDF distance");
}

/// Distance between the original cloud and one perturbation.
/// ECDF kinds sum the statistic over the x, y and z coordinate samples; an axis
/// whose two samples are equal as multisets contributes exactly 0.
/// Cosine ignores coordinates and measures the mask row against all ones.
inline double cloud_distance(DistanceKind kind, const PointCloud& original, const PointCloud& perturbed,
                             std::span<const std::uint8_t> mask_row) {
    if (kind == DistanceKind::Cosine) return cosine_mask_distance(mask_row);
    if (original.empty() || perturbed.empty()) throw InvalidArgument("cloud_distance: empty cloud");
    double total = 0;
    for (std::size_t axis = 0; axis < 3; ++axis) {
        auto a = original.axis(axis);
        auto b = perturbed.axis(axis);
        if (a.size() == b.size()) {
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a == b) continue;
        }
        total += ecdf_distance(kind, a, b);
    }
    return total;
}

}  // namespace smilepc
