#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "uwmark/error.hpp"
#include "uwmark/simulate.hpp"

namespace uwmark::sim {
namespace {

struct Segment {
    double center;
    double length;
};

// Splits each pixel's metric interval at the grid breakpoints so every piece
// has a constant colour; yields exact area coverage.
std::vector<std::vector<Segment>> pixel_segments(int n, double ppm, double margin, const std::vector<double>& breaks) {
    std::vector<std::vector<Segment>> out(n);
    auto it = breaks.begin();
    for (int k = 0; k < n; ++k) {
        double a = k / ppm - margin;
        const double b = (k + 1) / ppm - margin;
        while (it != breaks.end() && *it <= a) ++it;
        for (auto j = it; j != breaks.end() && *j < b; ++j) {
            out[k].push_back({0.5 * (a + *j), *j - a});
            a = *j;
        }
        out[k].push_back({0.5 * (a + b), b - a});
    }
    return out;
}

std::vector<double> grid_breaks(int count, double length, double gap) {
    std::vector<double> v;
    for (int m = 0; m < count; ++m)
        for (int i = 0; i <= markers::kMarkerCells; ++i) v.push_back(m * (length + gap) + i * length / markers::kMarkerCells);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

std::vector<int> BoardSpec::resolved_ids() const {
    if (!ids.empty()) return ids;
    std::vector<int> v(static_cast<std::size_t>(rows) * cols);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(i);
    return v;
}

BoardRender render_board(const markers::MarkerDictionary& dict, const BoardSpec& spec) {
    if (spec.rows < 1 || spec.cols < 1) throw Error(ErrorCode::InvalidArgument, "board needs at least one marker");
    if (!(spec.marker_length > 0) || spec.gap < 0 || spec.pixels_per_cell < 1)
        throw Error(ErrorCode::InvalidArgument, "invalid board geometry");
    const auto ids = spec.resolved_ids();
    if (ids.size() != static_cast<std::size_t>(spec.rows) * spec.cols)
        throw Error(ErrorCode::InvalidArgument, "board needs rows*cols ids");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= static_cast<int>(dict.size()))
            throw Error(ErrorCode::UnknownId, "marker id " + std::to_string(ids[i]) + " not in dictionary");
        if (std::find(ids.begin(), ids.begin() + i, ids[i]) != ids.begin() + i)
            throw Error(ErrorCode::InvalidArgument, "duplicate marker id " + std::to_string(ids[i]));
    }

    const double L = spec.marker_length, pitch = L + spec.gap, cell = L / markers::kMarkerCells;
    BoardRender out;
    out.margin_m = spec.resolved_margin();
    out.pixels_per_meter = markers::kMarkerCells * spec.pixels_per_cell / L;
    const double ppm = out.pixels_per_meter;
    const int w = static_cast<int>(std::ceil((spec.width_m() + 2 * out.margin_m) * ppm - 1e-9));
    const int h = static_cast<int>(std::ceil((spec.height_m() + 2 * out.margin_m) * ppm - 1e-9));

    auto white_at = [&](double mx, double my) {
        const int c = static_cast<int>(std::floor(mx / pitch)), r = static_cast<int>(std::floor(my / pitch));
        if (c < 0 || r < 0 || c >= spec.cols || r >= spec.rows) return true;
        const double lx = mx - c * pitch, ly = my - r * pitch;
        if (lx >= L || ly >= L) return true;
        const int cx = std::clamp(static_cast<int>(lx / cell), 0, markers::kMarkerCells - 1);
        const int cy = std::clamp(static_cast<int>(ly / cell), 0, markers::kMarkerCells - 1);
        if (cx == 0 || cy == 0 || cx == markers::kMarkerCells - 1 || cy == markers::kMarkerCells - 1) return false;
        return markers::code_bit(dict.codes[ids[r * spec.cols + c]], cy - 1, cx - 1);
    };

    const auto xs = pixel_segments(w, ppm, out.margin_m, grid_breaks(spec.cols, L, spec.gap));
    const auto ys = pixel_segments(h, ppm, out.margin_m, grid_breaks(spec.rows, L, spec.gap));
    Plane p(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0, area = 0;
            for (const auto& sy : ys[y])
                for (const auto& sx : xs[x]) {
                    const double a = sx.length * sy.length;
                    area += a;
                    if (white_at(sx.center, sy.center)) acc += a;
                }
            p.data[static_cast<std::size_t>(y) * w + x] = acc / area;
        }
    }
    const std::array<Plane, 3> planes{p, p, p};
    out.image = Image::from_planes(planes);

    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            const double x0 = c * pitch, y0 = r * pitch;
            out.markers.push_back({ids[r * spec.cols + c], {{{x0, y0}, {x0 + L, y0}, {x0 + L, y0 + L}, {x0, y0 + L}}}});
        }
    }
    return out;
}

Composite composite_scene(const BoardRender& board, const ScenePose& pose, int width, int height,
                          const Rgb& background, int supersample, double visibility_margin_px) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "canvas must be non-empty");
    const Eigen::Matrix3d& hm = pose.homography;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(hm);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularHomography, "scene homography is singular");
    // Compose metric->board-pixel with the inverse homography once.
    const double ppm = board.pixels_per_meter, off = board.margin_m * ppm - 0.5;
    Eigen::Matrix3d to_board;
    to_board << ppm, 0, off, 0, ppm, off, 0, 0, 1;
    const Eigen::Matrix3d inv = to_board * hm.inverse();

    const int s = std::max(1, supersample);
    const int bw = board.image.width(), bh = board.image.height();
    const auto src = board.image.plane(0);
    Composite out;
    out.image = Image(width, height, 3);
    for (int c = 0; c < 3; ++c) std::fill(out.image.plane(c).begin(), out.image.plane(c).end(), background[c]);

    // Canvas bounding box of the board; fall back to the full canvas if the
    // board straddles the camera plane.
    int x0 = 0, y0 = 0, x1 = width - 1, y1 = height - 1;
    {
        const double mw = (bw + 0.0) / ppm - board.margin_m, mh = (bh + 0.0) / ppm - board.margin_m;
        const double m0 = -board.margin_m;
        double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
        bool behind = false;
        for (const auto& q : {Point2{m0, m0}, Point2{mw, m0}, Point2{mw, mh}, Point2{m0, mh}}) {
            const Eigen::Vector3d v = hm * Eigen::Vector3d(q.x, q.y, 1);
            if (v.z() <= 0) behind = true;
            lo_x = std::min(lo_x, v.x() / v.z());
            hi_x = std::max(hi_x, v.x() / v.z());
            lo_y = std::min(lo_y, v.y() / v.z());
            hi_y = std::max(hi_y, v.y() / v.z());
        }
        if (!behind) {
            x0 = std::max(0, static_cast<int>(std::floor(lo_x)) - 1);
            y0 = std::max(0, static_cast<int>(std::floor(lo_y)) - 1);
            x1 = std::min(width - 1, static_cast<int>(std::ceil(hi_x)) + 1);
            y1 = std::min(height - 1, static_cast<int>(std::ceil(hi_y)) + 1);
        }
    }

    const double inv_n = 1.0 / (s * s);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double gray = 0, outside = 0;
            for (int j = 0; j < s; ++j) {
                const double py = y - 0.5 + (j + 0.5) / s;
                for (int i = 0; i < s; ++i) {
                    const double px = x - 0.5 + (i + 0.5) / s;
                    const double wz = inv(2, 0) * px + inv(2, 1) * py + inv(2, 2);
                    const double bx = (inv(0, 0) * px + inv(0, 1) * py + inv(0, 2)) / wz;
                    const double by = (inv(1, 0) * px + inv(1, 1) * py + inv(1, 2)) / wz;
                    if (wz <= 0 || !(bx >= -0.5 && by >= -0.5 && bx <= bw - 0.5 && by <= bh - 0.5)) {
                        outside += 1;
                        continue;
                    }
                    const double cx = std::clamp(bx, 0.0, bw - 1.0), cy = std::clamp(by, 0.0, bh - 1.0);
                    const int ix = std::min(static_cast<int>(cx), std::max(bw - 2, 0));
                    const int iy = std::min(static_cast<int>(cy), std::max(bh - 2, 0));
                    const int ix1 = std::min(ix + 1, bw - 1), iy1 = std::min(iy + 1, bh - 1);
                    const double fx = cx - ix, fy = cy - iy;
                    const double* r0 = src.data() + static_cast<std::size_t>(iy) * bw;
                    const double* r1 = src.data() + static_cast<std::size_t>(iy1) * bw;
                    gray += (r0[ix] * (1 - fx) + r0[ix1] * fx) * (1 - fy) + (r1[ix] * (1 - fx) + r1[ix1] * fx) * fy;
                }
            }
            for (int c = 0; c < 3; ++c) out.image.at(c, x, y) = (gray + outside * background[c]) * inv_n;
        }
    }

    out.truth.distance_m = pose.distance;
    const double m = visibility_margin_px;
    for (const auto& mk : board.markers) {
        GtMarker g;
        g.id = mk.id;
        bool behind = false;
        double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
        for (int i = 0; i < 4; ++i) {
            const Eigen::Vector3d v = hm * Eigen::Vector3d(mk.corners[i].x, mk.corners[i].y, 1);
            if (v.z() <= 0) behind = true;
            g.corners[i] = {v.x() / v.z(), v.y() / v.z()};
            lo_x = std::min(lo_x, g.corners[i].x);
            hi_x = std::max(hi_x, g.corners[i].x);
            lo_y = std::min(lo_y, g.corners[i].y);
            hi_y = std::max(hi_y, g.corners[i].y);
        }
        if (behind || hi_x < -0.5 || hi_y < -0.5 || lo_x > width - 0.5 || lo_y > height - 0.5) continue;
        g.fully_visible = lo_x >= m && lo_y >= m && hi_x <= width - 1 - m && hi_y <= height - 1 - m;
        out.truth.markers.push_back(g);
    }
    return out;
}

ScenePose board_pose(const BoardSpec& spec, const Camera& cam, double distance, double yaw_deg, double pitch_deg,
                     double roll_deg, double offset_x, double offset_y) {
    if (!(distance > 0)) throw Error(ErrorCode::InvalidArgument, "distance must be positive");
    const double d2r = std::numbers::pi / 180.0;
    const Eigen::Matrix3d r = (Eigen::AngleAxisd(roll_deg * d2r, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(pitch_deg * d2r, Eigen::Vector3d::UnitX()) *
                               Eigen::AngleAxisd(yaw_deg * d2r, Eigen::Vector3d::UnitY()))
                                  .toRotationMatrix();
    Eigen::Matrix3d k;
    k << cam.focal_px, 0, (cam.width - 1) / 2.0, 0, cam.focal_px, (cam.height - 1) / 2.0, 0, 0, 1;
    const double cx = spec.width_m() / 2, cy = spec.height_m() / 2;
    Eigen::Matrix3d rt;
    rt.col(0) = r.col(0);
    rt.col(1) = r.col(1);
    rt.col(2) = Eigen::Vector3d(offset_x, offset_y, distance) - cx * r.col(0) - cy * r.col(1);
    ScenePose pose;
    pose.homography = k * rt;
    pose.homography /= pose.homography(2, 2);
    pose.distance = distance;
    return pose;
}

}  // namespace uwmark::sim
