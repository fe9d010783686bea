#pragma once

// Agreement between black-box outputs f(Z_i) and surrogate outputs g(Z_i).

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <utility>

#include "json.hpp"
#include "smilepc/error.hpp"
#include "smilepc/explain.hpp"

namespace smilepc {

struct FidelityReport {
    double l_m = 0;
    double l1 = 0;
    double l1w = 0;
    double l2 = 0;
    double l2w = 0;
    double r2w = 0;
    double adj_r2w = 0;
    std::size_t np = 0;
    std::size_t ns = 0;
};

namespace detail {
inline void check_lengths(std::span<const double> f, std::span<const double> g) {
    if (f.size() != g.size()) throw InvalidArgument("f and g must have equal length");
    if (f.empty()) throw InvalidArgument("fidelity metrics need at least one sample");
}
inline void check_lengths(std::span<const double> f, std::span<const double> g, std::span<const double> w) {
    check_lengths(f, g);
    if (w.size() != f.size()) throw InvalidArgument("weights must match f and g in length");
}
}  // namespace detail

/// |mean(f) - mean(g)|
inline double mean_loss(std::span<const double> f, std::span<const double> g) {
    detail::check_lengths(f, g);
    const double np = static_cast<double>(f.size());
    double sf = 0, sg = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        sf += f[i] / np;
        sg += g[i] / np;
    }
    return std::abs(sf - sg);
}

/// (mean |f - g|, mean (f - g)^2)
inline std::pair<double, double> l1_l2(std::span<const double> f, std::span<const double> g) {
    detail::check_lengths(f, g);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = f[i] - g[i];
        a += std::abs(d);
        b += d * d;
    }
    const double np = static_cast<double>(f.size());
    return {a / np, b / np};
}

/// Weighted losses divided by Np (not by the weight sum).
inline std::pair<double, double> weighted_l1_l2(std::span<const double> f, std::span<const double> g,
                                                std::span<const double> w) {
    detail::check_lengths(f, g, w);
    double a = 0, b = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (w[i] < 0) throw InvalidArgument("weights must be non-negative");
        const double d = f[i] - g[i];
        a += std::abs(d) * w[i];
        b += d * d * w[i];
    }
    const double np = static_cast<double>(f.size());
    return {a / np, b / np};
}

/// 1 - sum (f - g)^2 / sum (f - fbar_w)^2 with fbar_w the weighted mean of f.
/// Only the mean is weighted.
inline double weighted_r2(std::span<const double> f, std::span<const double> g, std::span<const double> w) {
    detail::check_lengths(f, g, w);
    double wsum = 0, wf = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        wsum += w[i];
        wf += w[i] * f[i];
    }
    if (!(wsum > 0)) throw UndefinedMetricError("weighted R^2 needs a positive weight sum");
    const double fbar = wf / wsum;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        num += (f[i] - g[i]) * (f[i] - g[i]);
        den += (f[i] - fbar) * (f[i] - fbar);
    }
    if (!(den > 0)) throw UndefinedMetricError("weighted R^2 is undefined: f has no spread around its weighted mean");
    return 1.0 - num / den;
}

/// Conventional fully weighted R^2 (weighted residual and total sums). Not used
/// by the reports; provided for comparison.
inline double conventional_weighted_r2(std::span<const double> f, std::span<const double> g, std::span<const double> w) {
    detail::check_lengths(f, g, w);
    double wsum = 0, wf = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        wsum += w[i];
        wf += w[i] * f[i];
    }
    if (!(wsum > 0)) throw UndefinedMetricError("weighted R^2 needs a positive weight sum");
    const double fbar = wf / wsum;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        num += w[i] * (f[i] - g[i]) * (f[i] - g[i]);
        den += w[i] * (f[i] - fbar) * (f[i] - fbar);
    }
    if (!(den > 0)) throw UndefinedMetricError("weighted R^2 is undefined: zero weighted variance");
    return 1.0 - num / den;
}

/// 1 - (1 - r2w) (np - 1) / (np - ns - 1)
inline double adjusted_weighted_r2(double r2w, std::size_t np, std::size_t ns) {
    if (np <= ns + 1) throw UndefinedMetricError("adjusted R^2 needs more samples than features + 1");
    return 1.0 - (1.0 - r2w) * static_cast<double>(np - 1) / static_cast<double>(np - ns - 1);
}

inline FidelityReport fidelity_report(std::span<const double> f, std::span<const double> g, std::span<const double> w,
                                      std::size_t ns) {
    FidelityReport r;
    r.np = f.size();
    r.ns = ns;
    r.l_m = mean_loss(f, g);
    std::tie(r.l1, r.l2) = l1_l2(f, g);
    std::tie(r.l1w, r.l2w) = weighted_l1_l2(f, g, w);
    r.r2w = weighted_r2(f, g, w);
    r.adj_r2w = adjusted_weighted_r2(r.r2w, r.np, ns);
    return r;
}

/// Report for an explanation against black-box outputs `f` (one per mask row).
inline FidelityReport fidelity_report(const Explanation& ex, std::span<const double> f) {
    if (f.size() != ex.fit.predictions.size()) throw InvalidArgument("f must have one entry per perturbation");
    return fidelity_report(f, ex.fit.predictions, ex.weights, ex.fit.coefficients.size());
}

inline FidelityReport fidelity_report(const Explanation& ex) { return fidelity_report(ex, ex.targets); }

inline nlohmann::json to_json(const FidelityReport& r) {
    return {{"C", r.ns},     {"np", r.np},    {"L_m", r.l_m}, {"L1", r.l1},         {"L1w", r.l1w},
            {"L2", r.l2},    {"L2w", r.l2w},  {"R2w", r.r2w}, {"adjR2w", r.adj_r2w}};
}

inline constexpr const char* kFidelityCsvHeader = "C,L_m,L1,L1w,L2,L2w,R2w,adjR2w";

/// One CSV row in the fixed column order C,L_m,L1,L1w,L2,L2w,R2w,adjR2w.
inline std::string fidelity_csv_row(const FidelityReport& r) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6e", v);
        return std::string(buf);
    };
    return std::to_string(r.ns) + "," + num(r.l_m) + "," + num(r.l1) + "," + num(r.l1w) + "," + num(r.l2) + "," +
           num(r.l2w) + "," + num(r.r2w) + "," + num(r.adj_r2w);
}

}  // namespace smilepc
