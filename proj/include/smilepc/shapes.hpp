#pragma once

// Synthetic shape families used by the toy classifier and the test suites.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smilepc/geometry.hpp"
#include "smilepc/rng.hpp"

namespace smilepc {

enum class ToyShape { Sphere, Box, Plate, Cross };

inline constexpr std::array<ToyShape, 4> kToyShapes{ToyShape::Sphere, ToyShape::Box, ToyShape::Plate,
                                                   ToyShape::Cross};

inline std::string_view shape_name(ToyShape s) {
    switch (s) {
        case ToyShape::Sphere: return "sphere";
        case ToyShape::Box: return "box";
        case ToyShape::Plate: return "plate";
        case ToyShape::Cross: return "cross";
    }
    return "?";
}

inline std::optional<ToyShape> parse_shape(std::string_view name) {
    for (auto s : kToyShapes)
        if (shape_name(s) == name) return s;
    return std::nullopt;
}

namespace detail {

/// Uniform point inside the axis-aligned box [lo, hi].
inline Point3 in_box(Rng& rng, const Point3& lo, const Point3& hi) {
    return {rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1]), rng.uniform(lo[2], hi[2])};
}

/// Uniform point on the surface of the box centered at the origin with half-extents `h`.
inline Point3 on_box_surface(Rng& rng, const Point3& h) {
    const std::array<double, 3> face_area{h[1] * h[2], h[0] * h[2], h[0] * h[1]};
    const double total = face_area[0] + face_area[1] + face_area[2];
    double pick = rng.uniform() * total;
    std::size_t axis = 0;
    while (axis < 2 && pick >= face_area[axis]) pick -= face_area[axis++];
    Point3 p{rng.uniform(-h[0], h[0]), rng.uniform(-h[1], h[1]), rng.uniform(-h[2], h[2])};
    p[axis] = rng.coin() ? h[axis] : -h[axis];
    return p;
}

}  // namespace detail

/// `n` points of the given family, normalized to the unit sphere.
///   sphere: uniform on the unit sphere surface
///   box:    uniform on the surface of a 2 x 1.4 x 1 box
///   plate:  uniform in a 2 x 2 x 0.02 slab
///   cross:  uniform in three orthogonal 2 x 0.2 x 0.2 bars
inline PointCloud make_shape(ToyShape shape, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("shape point count must be positive");
    Rng rng(derive_seed(seed, "shape", static_cast<std::uint64_t>(shape)));
    std::vector<Point3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (shape) {
            case ToyShape::Sphere: {
                Point3 p;
                double r;
                do {
                    p = {rng.normal(), rng.normal(), rng.normal()};
                    r = norm(p);
                } while (r < 1e-12);
                pts.push_back({p[0] / r, p[1] / r, p[2] / r});
                break;
            }
            case ToyShape::Box: pts.push_back(detail::on_box_surface(rng, {1.0, 0.7, 0.5})); break;
            case ToyShape::Plate: pts.push_back(detail::in_box(rng, {-1, -1, -0.01}, {1, 1, 0.01})); break;
            case ToyShape::Cross: {
                const auto bar = rng.index(3);
                Point3 lo{-0.1, -0.1, -0.1}, hi{0.1, 0.1, 0.1};
                lo[bar] = -1.0;
                hi[bar] = 1.0;
                pts.push_back(detail::in_box(rng, lo, hi));
                break;
            }
        }
    }
    return normalize(PointCloud(std::move(pts)));
}

}  // namespace smilepc
