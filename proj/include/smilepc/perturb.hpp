#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "smilepc/clustering.hpp"
#include "smilepc/error.hpp"
#include "smilepc/geometry.hpp"
#include "smilepc/rng.hpp"

namespace smilepc {

/// Np x C binary design matrix. Row 0 is all ones (the unperturbed instance);
/// no row is all zeros.
class MaskMatrix {
public:
    MaskMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::uint8_t operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c]; }
    std::uint8_t& operator()(std::size_t r, std::size_t c) { return bits_[r * cols_ + c]; }

    std::span<const std::uint8_t> row(std::size_t r) const { return {bits_.data() + r * cols_, cols_}; }

    std::size_t popcount(std::size_t r) const {
        std::size_t s = 0;
        for (auto b : row(r)) s += b;
        return s;
    }

    friend bool operator==(const MaskMatrix&, const MaskMatrix&) = default;

private:
    std::size_t rows_, cols_;
    std::vector<std::uint8_t> bits_;
};

/// Row 0 all ones, then i.i.d. fair coin flips per entry; an all-zero row is redrawn.
inline MaskMatrix generate_masks(std::size_t np, std::size_t c, std::uint64_t seed) {
    if (np < 2) throw InvalidArgument("perturbation count must be at least 2");
    if (c == 0) throw InvalidArgument("cluster count must be positive");
    MaskMatrix m(np, c);
    for (std::size_t j = 0; j < c; ++j) m(0, j) = 1;
    Rng rng(derive_seed(seed, "masks"));
    for (std::size_t i = 1; i < np; ++i) {
        std::size_t ones;
        do {
            ones = 0;
            for (std::size_t j = 0; j < c; ++j) {
                m(i, j) = rng.coin() ? 1 : 0;
                ones += m(i, j);
            }
        } while (ones == 0);
    }
    return m;
}

/// Drops points of switched-off clusters, then pads back to `target_n` by
/// uniform resampling (with replacement) of the retained points.
/// An all-ones mask returns the cloud unchanged.
inline PointCloud realize(const PointCloud& cloud, const ClusterModel& clusters, std::span<const std::uint8_t> mask_row,
                          std::size_t target_n, std::uint64_t seed) {
    if (mask_row.size() != clusters.c) throw InvalidArgument("mask length does not match cluster count");
    if (clusters.assignment.size() != cloud.size()) throw InvalidArgument("cluster model does not cover the cloud");
    if (target_n == 0) throw InvalidArgument("target size must be positive");

    std::vector<Point3> kept;
    kept.reserve(std::max(target_n, cloud.size()));
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (mask_row[clusters.assignment[i]]) kept.push_back(cloud[i]);
    if (kept.empty()) throw InvalidArgument("mask switches off every cluster");
    if (kept.size() == cloud.size() && target_n <= cloud.size()) return cloud;

    const std::size_t retained = kept.size();
    Rng rng(seed);
    while (kept.size() < target_n) kept.push_back(kept[static_cast<std::size_t>(rng.index(retained))]);
    return PointCloud(std::move(kept));
}

inline nlohmann::json to_json(const MaskMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        rows.push_back(std::vector<int>(r.begin(), r.end()));
    }
    return {{"np", m.rows()}, {"c", m.cols()}, {"rows", std::move(rows)}};
}

}  // namespace smilepc
