#pragma once

// Point clouds, triangle meshes and the file formats around them:
// OFF (ModelNet40 dialect) and XYZ input, ASCII PLY saliency output,
// and a JSON point dump.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "smilepc/error.hpp"
#include "smilepc/rng.hpp"

namespace smilepc {

using Point3 = std::array<double, 3>;

inline double squared_distance(const Point3& a, const Point3& b) noexcept {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

inline double norm(const Point3& p) noexcept {
    return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

/// Ordered, non-empty list of finite 3D points.
class PointCloud {
public:
    PointCloud() = default;

    explicit PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
        if (points_.empty()) throw InvalidArgument("point cloud must contain at least one point");
        for (const auto& p : points_) {
            if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
                throw InvalidArgument("point cloud coordinates must be finite");
        }
    }

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Point3& operator[](std::size_t i) const { return points_[i]; }
    const std::vector<Point3>& points() const noexcept { return points_; }
    auto begin() const noexcept { return points_.begin(); }
    auto end() const noexcept { return points_.end(); }

    /// Values of one coordinate axis, in point order.
    std::vector<double> axis(std::size_t a) const {
        std::vector<double> out;
        out.reserve(points_.size());
        for (const auto& p : points_) out.push_back(p[a]);
        return out;
    }

    Point3 centroid() const {
        Point3 c{0, 0, 0};
        for (const auto& p : points_)
            for (std::size_t a = 0; a < 3; ++a) c[a] += p[a];
        for (auto& v : c) v /= static_cast<double>(points_.size());
        return c;
    }

    friend bool operator==(const PointCloud&, const PointCloud&) = default;

private:
    std::vector<Point3> points_;
};

struct Face {
    std::uint32_t a, b, c;
    friend bool operator==(const Face&, const Face&) = default;
};

struct TriangleMesh {
    std::vector<Point3> vertices;
    std::vector<Face> faces;

    double face_area(const Face& f) const {
        const auto& p = vertices[f.a];
        const auto& q = vertices[f.b];
        const auto& r = vertices[f.c];
        const Point3 u{q[0] - p[0], q[1] - p[1], q[2] - p[2]};
        const Point3 v{r[0] - p[0], r[1] - p[1], r[2] - p[2]};
        const Point3 x{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
        return 0.5 * norm(x);
    }
};

/// Points with a super-point id and a salient flag each; salience is constant per cluster.
struct SaliencyCloud {
    PointCloud points;
    std::vector<std::size_t> cluster_id;
    std::vector<bool> is_salient;

    void validate() const {
        if (cluster_id.size() != points.size() || is_salient.size() != points.size())
            throw InvalidArgument("saliency cloud arrays must match the point count");
        std::vector<int> state;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = cluster_id[i];
            if (c >= state.size()) state.resize(c + 1, -1);
            const int s = is_salient[i] ? 1 : 0;
            if (state[c] == -1) state[c] = s;
            else if (state[c] != s)
                throw InvalidArgument("salient flag differs within cluster " + std::to_string(c));
        }
    }
};

// ---------------------------------------------------------------------------
// OFF

namespace detail {

inline std::string strip_comment(const std::string& line) {
    const auto hash = line.find('#');
    std::string s = hash == std::string::npos ? line : line.substr(0, hash);
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Yields non-empty, comment-stripped lines with their 1-based numbers.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& out) {
        std::string raw;
        while (std::getline(in_, raw)) {
            ++line_;
            out = strip_comment(raw);
            if (!out.empty()) return true;
        }
        return false;
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

inline long long parse_count(std::istringstream& ss, const char* what, std::size_t line) {
    long long v;
    if (!(ss >> v) || v < 0) throw ParseError(std::string("malformed ") + what + " count", line);
    return v;
}

}  // namespace detail

/// Parses an OFF mesh. Accepts the ModelNet40 variant where the counts follow
/// "OFF" on the same line ("OFF490 518 0"); polygons are fan-triangulated.
inline TriangleMesh read_off(std::istream& in) {
    detail::LineReader reader(in);
    std::string line;
    if (!reader.next(line) || line.rfind("OFF", 0) != 0) throw ParseError("missing OFF header", reader.line());

    std::string counts = detail::strip_comment(line.substr(3));
    if (counts.empty()) {
        if (!reader.next(counts)) throw ParseError("missing vertex/face count line", reader.line());
    }
    std::istringstream cs(counts);
    const auto nv = detail::parse_count(cs, "vertex", reader.line());
    const auto nf = detail::parse_count(cs, "face", reader.line());

    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nv));
    for (long long i = 0; i < nv; ++i) {
        if (!reader.next(line)) throw ParseError("unexpected end of file in vertex list", reader.line());
        std::istringstream ss(line);
        Point3 p;
        if (!(ss >> p[0] >> p[1] >> p[2])) throw ParseError("malformed vertex", reader.line());
        mesh.vertices.push_back(p);
    }
    for (long long i = 0; i < nf; ++i) {
        if (!reader.next(line)) throw ParseError("unexpected end of file in face list", reader.line());
        std::istringstream ss(line);
        long long k;
        if (!(ss >> k) || k < 3) throw ParseError("face must have at least 3 vertices", reader.line());
        std::vector<std::uint32_t> idx(static_cast<std::size_t>(k));
        for (auto& v : idx) {
            long long raw;
            if (!(ss >> raw)) throw ParseError("malformed face", reader.line());
            if (raw < 0 || raw >= nv) throw ParseError("face index out of range", reader.line());
            v = static_cast<std::uint32_t>(raw);
        }
        for (std::size_t t = 1; t + 1 < idx.size(); ++t) mesh.faces.push_back({idx[0], idx[t], idx[t + 1]});
    }
    return mesh;
}

inline TriangleMesh read_off(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_off(in);
}

inline void write_off(const TriangleMesh& mesh, std::ostream& out) {
    out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices) out << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
    for (const auto& f : mesh.faces) out << "3 " << f.a << ' ' << f.b << ' ' << f.c << '\n';
}

/// One "x y z" triple per line; '#' starts a comment.
inline PointCloud read_xyz(std::istream& in) {
    detail::LineReader reader(in);
    std::string line;
    std::vector<Point3> pts;
    while (reader.next(line)) {
        std::istringstream ss(line);
        Point3 p;
        if (!(ss >> p[0] >> p[1] >> p[2])) throw ParseError("malformed point", reader.line());
        pts.push_back(p);
    }
    if (pts.empty()) throw ParseError("no points", reader.line());
    return PointCloud(std::move(pts));
}

inline PointCloud read_xyz(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_xyz(in);
}

// ---------------------------------------------------------------------------
// Sampling and normalization

/// `n` points, triangle chosen proportionally to area, then uniform barycentric.
inline PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("sample count must be positive");
    std::vector<double> cumulative;
    cumulative.reserve(mesh.faces.size());
    double total = 0;
    for (const auto& f : mesh.faces) {
        if (f.a >= mesh.vertices.size() || f.b >= mesh.vertices.size() || f.c >= mesh.vertices.size())
            throw InvalidArgument("face index out of range");
        total += mesh.face_area(f);
        cumulative.push_back(total);
    }
    if (!(total > 0)) throw InvalidArgument("mesh has zero surface area");

    Rng rng(seed);
    std::vector<Point3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) --it;
        const Face& f = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const double wa = 1.0 - r1, wb = r1 * (1.0 - r2), wc = r1 * r2;
        const auto& a = mesh.vertices[f.a];
        const auto& b = mesh.vertices[f.b];
        const auto& c = mesh.vertices[f.c];
        pts.push_back({wa * a[0] + wb * b[0] + wc * c[0], wa * a[1] + wb * b[1] + wc * c[1],
                       wa * a[2] + wb * b[2] + wc * c[2]});
    }
    return PointCloud(std::move(pts));
}

/// Centers on the centroid and scales so the farthest point has norm 1.
/// A cloud of coincident points is only centered.
inline PointCloud normalize(const PointCloud& cloud) {
    const Point3 c = cloud.centroid();
    std::vector<Point3> pts;
    pts.reserve(cloud.size());
    double max_norm = 0;
    for (const auto& p : cloud) {
        pts.push_back({p[0] - c[0], p[1] - c[1], p[2] - c[2]});
        max_norm = std::max(max_norm, norm(pts.back()));
    }
    if (max_norm > 0) {
        for (auto& p : pts)
            for (auto& v : p) v /= max_norm;
    }
    return PointCloud(std::move(pts));
}

// ---------------------------------------------------------------------------
// Output

inline constexpr std::array<std::uint8_t, 3> kSalientColor{255, 0, 0};
inline constexpr std::array<std::uint8_t, 3> kPlainColor{30, 30, 200};

inline void write_saliency_ply(const SaliencyCloud& sal, std::ostream& out) {
    sal.validate();
    out << "ply\n"
        << "format ascii 1.0\n"
        << "element vertex " << sal.points.size() << "\n"
        << "property float x\n"
        << "property float y\n"
        << "property float z\n"
        << "property uchar red\n"
        << "property uchar green\n"
        << "property uchar blue\n"
        << "end_header\n";
    out << std::setprecision(9);
    for (std::size_t i = 0; i < sal.points.size(); ++i) {
        const auto& p = sal.points[i];
        const auto& col = sal.is_salient[i] ? kSalientColor : kPlainColor;
        out << p[0] << ' ' << p[1] << ' ' << p[2] << ' ' << int(col[0]) << ' ' << int(col[1]) << ' '
            << int(col[2]) << '\n';
    }
}

inline void write_saliency_ply(const SaliencyCloud& sal, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_saliency_ply(sal, out);
    if (!out) throw IoError("write failed: " + path.string());
}

inline nlohmann::json to_json(const PointCloud& cloud) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : cloud) pts.push_back({p[0], p[1], p[2]});
    return {{"points", std::move(pts)}};
}

inline PointCloud cloud_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("points") || !j["points"].is_array())
        throw ParseError("expected {\"points\": [[x,y,z],...]}", 0);
    std::vector<Point3> pts;
    for (const auto& p : j["points"]) {
        if (!p.is_array() || p.size() != 3) throw ParseError("point must be a 3-element array", 0);
        pts.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    return PointCloud(std::move(pts));
}

/// Axis-aligned bounding box diagonal length.
inline double bounding_diagonal(const PointCloud& cloud) {
    Point3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity()};
    Point3 hi{-lo[0], -lo[1], -lo[2]};
    for (const auto& p : cloud)
        for (std::size_t a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    return std::sqrt(squared_distance(lo, hi));
}

}  // namespace smilepc
