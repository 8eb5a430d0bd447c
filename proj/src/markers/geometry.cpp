#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "uwmark/error.hpp"
#include "uwmark/markers.hpp"

namespace uwmark::markers {
namespace {

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }
double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

double segment_distance(PointI p, PointI a, PointI b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) return std::hypot(p.x - a.x, p.y - a.y);
    return std::abs(dx * (p.y - a.y) - dy * (p.x - a.x)) / len;
}

// Simplifies the open chain c[i..j] (indices modulo n), appending kept
// vertices after i (j itself is not appended).
void simplify_chain(const Contour& c, std::size_t i, std::size_t j, double eps, std::vector<PointI>& out) {
    const std::size_t n = c.size();
    struct Span {
        std::size_t a, b;
    };
    std::vector<Span> stack{{i, j}};
    std::vector<std::size_t> kept;
    while (!stack.empty()) {
        const Span s = stack.back();
        stack.pop_back();
        const std::size_t len = (s.b + n - s.a) % n;
        double best = -1.0;
        std::size_t best_k = s.a;
        for (std::size_t off = 1; off < len; ++off) {
            const std::size_t k = (s.a + off) % n;
            const double d = segment_distance(c[k], c[s.a], c[s.b]);
            if (d > best) {
                best = d;
                best_k = k;
            }
        }
        if (best > eps) {
            kept.push_back(best_k);
            stack.push_back({best_k, s.b});
            stack.push_back({s.a, best_k});
        }
    }
    std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) { return (a + n - i) % n < (b + n - i) % n; });
    for (std::size_t k : kept) out.push_back(c[k]);
}

Eigen::Matrix3d normalizer(std::span<const Point2, 4> pts) {
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= 4;
    my /= 4;
    double md = 0;
    for (const auto& p : pts) md += std::hypot(p.x - mx, p.y - my);
    md /= 4;
    const double s = md > 0 ? std::numbers::sqrt2 / md : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * mx, 0, s, -s * my, 0, 0, 1;
    return t;
}

bool has_collinear_triple(std::span<const Point2, 4> p) {
    for (int skip = 0; skip < 4; ++skip) {
        Point2 q[3];
        for (int i = 0, k = 0; i < 4; ++i)
            if (i != skip) q[k++] = p[i];
        const double scale = dist(q[0], q[1]) * dist(q[0], q[2]);
        if (scale == 0.0 || std::abs(cross(q[0], q[1], q[2])) <= 1e-9 * scale) return true;
    }
    return false;
}

}  // namespace

std::vector<PointI> approx_polygon(const Contour& contour, double epsilon) {
    const std::size_t n = contour.size();
    if (n <= 2) return contour;
    // Split the closed chain at two mutually distant points.
    auto farthest = [&](std::size_t from) {
        std::size_t best = from;
        long bd = -1;
        for (std::size_t k = 0; k < n; ++k) {
            const long dx = contour[k].x - contour[from].x, dy = contour[k].y - contour[from].y;
            if (dx * dx + dy * dy > bd) {
                bd = dx * dx + dy * dy;
                best = k;
            }
        }
        return best;
    };
    std::size_t a = farthest(0);
    std::size_t b = farthest(a);
    if (a == b) return {contour[a]};
    if (a > b) std::swap(a, b);
    std::vector<PointI> out{contour[a]};
    simplify_chain(contour, a, b, epsilon, out);
    out.push_back(contour[b]);
    simplify_chain(contour, b, a, epsilon, out);
    return out;
}

double Quad::perimeter() const {
    double p = 0;
    for (int i = 0; i < 4; ++i) p += dist(corners[i], corners[(i + 1) % 4]);
    return p;
}

Quad canonical_order(const Quad& q) {
    Quad out = q;
    double area2 = 0;
    for (int i = 0; i < 4; ++i) {
        const auto& a = q.corners[i];
        const auto& b = q.corners[(i + 1) % 4];
        area2 += a.x * b.y - b.x * a.y;
    }
    if (area2 < 0) std::reverse(out.corners.begin(), out.corners.end());
    double cx = 0, cy = 0;
    for (const auto& c : out.corners) {
        cx += c.x / 4;
        cy += c.y / 4;
    }
    int first = 0;
    double best = 1e300;
    for (int i = 0; i < 4; ++i) {
        const double ang = std::atan2(out.corners[i].y - cy, out.corners[i].x - cx);
        double diff = std::abs(ang + 0.75 * std::numbers::pi);
        diff = std::min(diff, 2 * std::numbers::pi - diff);
        if (diff < best) {
            best = diff;
            first = i;
        }
    }
    std::rotate(out.corners.begin(), out.corners.begin() + first, out.corners.end());
    return out;
}

std::vector<Quad> approx_quads(std::span<const Contour> contours, const DetectorParams& params, int width, int height) {
    const double dim = std::max(width, height);
    const double min_pts = params.min_perimeter_rate * dim;
    const double max_pts = params.max_perimeter_rate * dim;
    const double border = params.min_distance_to_border;
    std::vector<Quad> out;
    for (const auto& c : contours) {
        const double npts = static_cast<double>(c.size());
        if (npts < min_pts || npts > max_pts) continue;
        double arc = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto& a = c[i];
            const auto& b = c[(i + 1) % c.size()];
            arc += std::hypot(a.x - b.x, a.y - b.y);
        }
        const auto poly = approx_polygon(c, params.polygon_eps_rate * arc);
        if (poly.size() != 4) continue;
        Quad q;
        for (int i = 0; i < 4; ++i) q.corners[i] = {static_cast<double>(poly[i].x), static_cast<double>(poly[i].y)};
        int pos = 0, neg = 0;
        for (int i = 0; i < 4; ++i) {
            const double z = cross(q.corners[i], q.corners[(i + 1) % 4], q.corners[(i + 2) % 4]);
            pos += z > 0;
            neg += z < 0;
        }
        if (pos != 4 && neg != 4) continue;
        const double per = q.perimeter();
        double min_side = 1e300;
        for (int i = 0; i < 4; ++i) min_side = std::min(min_side, dist(q.corners[i], q.corners[(i + 1) % 4]));
        if (min_side < params.min_corner_distance_rate * per) continue;
        bool near_border = false;
        for (const auto& p : q.corners)
            near_border |= p.x < border || p.y < border || p.x > width - 1 - border || p.y > height - 1 - border;
        if (near_border) continue;
        out.push_back(canonical_order(q));
    }
    return out;
}

Point2 apply(const Homography& h, Point2 p) {
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

Homography homography_from_points(std::span<const Point2, 4> src, std::span<const Point2, 4> dst) {
    if (has_collinear_triple(src) || has_collinear_triple(dst))
        throw Error(ErrorCode::DegenerateQuad, "three of the four points are collinear");
    const Eigen::Matrix3d ts = normalizer(src), td = normalizer(dst);
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        const Eigen::Vector3d s = ts * Eigen::Vector3d(src[i].x, src[i].y, 1.0);
        const Eigen::Vector3d d = td * Eigen::Vector3d(dst[i].x, dst[i].y, 1.0);
        const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
    lu.setThreshold(1e-9);
    if (!lu.isInvertible()) throw Error(ErrorCode::DegenerateQuad, "homography system is singular");
    const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    Eigen::Matrix3d out = td.inverse() * hn * ts;
    if (std::abs(out(2, 2)) < 1e-12) throw Error(ErrorCode::DegenerateQuad, "homography maps the origin to infinity");
    return out / out(2, 2);
}

Homography quad_homography(const Quad& quad, int grid_size) {
    const double s = grid_size;
    const std::array<Point2, 4> canon{{{0, 0}, {s, 0}, {s, s}, {0, s}}};
    return homography_from_points(canon, quad.corners);
}

Pose estimate_pose(const DetectedMarker& m, const CameraIntrinsics& cam, double marker_length) {
    if (!(cam.fx > 0) || !(cam.fy > 0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
    if (!(marker_length > 0)) throw Error(ErrorCode::InvalidArgument, "marker length must be positive");
    const double h = marker_length / 2;
    const std::array<Point2, 4> obj{{{-h, -h}, {h, -h}, {h, h}, {-h, h}}};
    std::array<Point2, 4> img;
    for (int i = 0; i < 4; ++i)
        img[i] = {(m.corners[i].x - cam.cx) / cam.fx, (m.corners[i].y - cam.cy) / cam.fy};
    const Homography hm = homography_from_points(obj, img);
    const Eigen::Vector3d h1 = hm.col(0), h2 = hm.col(1), h3 = hm.col(2);
    double s = 2.0 / (h1.norm() + h2.norm());
    if (s * h3.z() < 0) s = -s;
    const Eigen::Vector3d a = (s * h1).normalized(), b = (s * h2).normalized();
    // Symmetric orthonormalization: rotate a and b apart about their bisector.
    const Eigen::Vector3d c = (a + b).normalized(), d = (a - b).normalized();
    Pose pose;
    pose.rotation.col(0) = (c + d) / std::numbers::sqrt2;
    pose.rotation.col(1) = (c - d) / std::numbers::sqrt2;
    pose.rotation.col(2) = pose.rotation.col(0).cross(pose.rotation.col(1));
    pose.translation = s * h3;
    return pose;
}

Point2 project(const Pose& pose, const CameraIntrinsics& cam, const Eigen::Vector3d& point) {
    const Eigen::Vector3d p = pose.rotation * point + pose.translation;
    return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

}  // namespace uwmark::markers
