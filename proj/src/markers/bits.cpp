#include <algorithm>
#include <cmath>
#include <numeric>

#include "uwmark/error.hpp"
#include "uwmark/markers.hpp"

namespace uwmark::markers {
namespace {

// Bilinear sample with pixel centres at integer coordinates; caller checks bounds.
double bilinear(const GrayU8& g, double x, double y) {
    const int x0 = std::min(static_cast<int>(x), g.width - 2 < 0 ? 0 : g.width - 2);
    const int y0 = std::min(static_cast<int>(y), g.height - 2 < 0 ? 0 : g.height - 2);
    const int x1 = std::min(x0 + 1, g.width - 1), y1 = std::min(y0 + 1, g.height - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = g.at(x0, y0) * (1 - fx) + g.at(x1, y0) * fx;
    const double bot = g.at(x0, y1) * (1 - fx) + g.at(x1, y1) * fx;
    return top * (1 - fy) + bot * fy;
}

double otsu_threshold(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    double best = -1, thr = 127.5, left = 0;
    for (std::size_t k = 1; k < n; ++k) {
        left += v[k - 1];
        if (v[k] == v[k - 1]) continue;
        const double w0 = static_cast<double>(k) / n, w1 = 1 - w0;
        const double m0 = left / k, m1 = (total - left) / (n - k);
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            thr = 0.5 * (v[k - 1] + v[k]);
        }
    }
    return thr;
}

}  // namespace

Code BitMatrix::payload() const {
    Code c = 0;
    for (int r = 0; r < kCodeGrid; ++r)
        for (int col = 0; col < kCodeGrid; ++col)
            if (cells[r + kBorderBits][col + kBorderBits]) c |= Code{1} << (r * kCodeGrid + col);
    return c;
}

BitMatrix sample_bits(const GrayU8& gray, const Homography& h, const DetectorParams& params) {
    if (params.border_bits != kBorderBits) throw Error(ErrorCode::InvalidArgument, "only one border cell is supported");
    const int n = std::max(1, params.cell_samples);
    const double margin = std::clamp(params.cell_margin_rate, 0.0, 0.45);
    const double step = (1.0 - 2 * margin) / n;
    std::vector<double> means(kMarkerCells * kMarkerCells, 255.0);
    int outside = 0;
    for (int r = 0; r < kMarkerCells; ++r) {
        for (int c = 0; c < kMarkerCells; ++c) {
            double sum = 0;
            int valid = 0;
            for (int sy = 0; sy < n; ++sy) {
                for (int sx = 0; sx < n; ++sx) {
                    const Point2 p = apply(h, {c + margin + (sx + 0.5) * step, r + margin + (sy + 0.5) * step});
                    if (!(p.x >= 0 && p.y >= 0 && p.x <= gray.width - 1 && p.y <= gray.height - 1)) {
                        ++outside;
                        continue;
                    }
                    sum += bilinear(gray, p.x, p.y);
                    ++valid;
                }
            }
            if (valid > 0) means[r * kMarkerCells + c] = sum / valid;
        }
    }
    const int total = kMarkerCells * kMarkerCells * n * n;
    if (outside * 5 > total) throw Error(ErrorCode::OutOfImage, "marker samples fall outside the image");

    double mean = 0, var = 0;
    for (double m : means) mean += m / means.size();
    for (double m : means) var += (m - mean) * (m - mean) / means.size();
    const double thr = params.otsu_fallback && std::sqrt(var) < 5.0 ? 127.5 : otsu_threshold(means);

    BitMatrix bits;
    for (int r = 0; r < kMarkerCells; ++r) {
        for (int c = 0; c < kMarkerCells; ++c) {
            const bool white = means[r * kMarkerCells + c] > thr;
            bits.cells[r][c] = white ? 1 : 0;
            const bool border = r < kBorderBits || c < kBorderBits || r >= kMarkerCells - kBorderBits ||
                                c >= kMarkerCells - kBorderBits;
            if (border && white) ++bits.border_violations;
        }
    }
    return bits;
}

std::optional<Decoded> decode_bits(Code payload, const MarkerDictionary& dict) {
    int best = 1 << 30;
    int ties = 0;
    Decoded out;
    for (std::size_t id = 0; id < dict.codes.size(); ++id) {
        Code rotated = dict.codes[id];
        for (int k = 0; k < 4; ++k) {
            const int d = hamming(payload, rotated);
            if (d < best) {
                best = d;
                ties = 1;
                out = {static_cast<int>(id), k, d};
            } else if (d == best) {
                ++ties;
            }
            rotated = rotate_code(rotated, 1);
        }
    }
    if (ties != 1 || best > dict.max_correction_bits) return std::nullopt;
    return out;
}

namespace {

struct Line {
    double nx, ny, c;  // nx*x + ny*y = c, unit normal
    bool ok = false;
};

Line fit_line(const std::vector<Point2>& pts) {
    Line l{0, 0, 0, false};
    if (pts.size() < 3) return l;
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& p : pts) {
        sxx += (p.x - mx) * (p.x - mx);
        sxy += (p.x - mx) * (p.y - my);
        syy += (p.y - my) * (p.y - my);
    }
    // Direction of largest spread; the normal is perpendicular to it.
    const double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
    l.nx = -std::sin(theta);
    l.ny = std::cos(theta);
    l.c = l.nx * mx + l.ny * my;
    l.ok = true;
    return l;
}

Line robust_fit(std::vector<Point2> pts) {
    Line l = fit_line(pts);
    if (!l.ok) return l;
    std::vector<Point2> inliers;
    for (const auto& p : pts)
        if (std::abs(l.nx * p.x + l.ny * p.y - l.c) <= 1.0) inliers.push_back(p);
    if (inliers.size() < pts.size() && inliers.size() >= 3) l = fit_line(inliers);
    return l;
}

std::optional<double> edge_offset(const GrayU8& g, Point2 base, Point2 n, double reach) {
    constexpr double kStep = 0.25;
    const int m = static_cast<int>(std::floor(2 * reach / kStep)) + 1;
    std::vector<double> prof(m);
    for (int k = 0; k < m; ++k) {
        const double u = -reach + k * kStep;
        const double x = base.x + u * n.x, y = base.y + u * n.y;
        if (x < 0 || y < 0 || x > g.width - 1 || y > g.height - 1) return std::nullopt;
        prof[k] = bilinear(g, x, y);
    }
    int kmax = 0;
    double gmax = 0;
    for (int k = 0; k + 1 < m; ++k) {
        const double d = prof[k + 1] - prof[k];
        if (d > gmax) {
            gmax = d;
            kmax = k;
        }
    }
    if (gmax <= 0) return std::nullopt;
    const double lo = *std::min_element(prof.begin(), prof.begin() + kmax + 1);
    const double hi = *std::max_element(prof.begin() + kmax + 1, prof.end());
    if (hi - lo < 8.0) return std::nullopt;
    const double mid = 0.5 * (lo + hi);
    // Half-level crossing nearest the steepest step.
    for (int off = 0; off < m; ++off) {
        for (int k : {kmax - off, kmax + off}) {
            if (k < 0 || k + 1 >= m) continue;
            if (prof[k] <= mid && prof[k + 1] > mid) {
                const double f = (mid - prof[k]) / (prof[k + 1] - prof[k]);
                return -reach + (k + f) * kStep;
            }
        }
    }
    return std::nullopt;
}

Quad refine_once(const GrayU8& gray, const Quad& quad, const std::array<double, 4>& limit) {
    std::array<Line, 4> lines;
    for (int i = 0; i < 4; ++i) {
        const Point2 p = quad.corners[i], q = quad.corners[(i + 1) % 4];
        const double len = std::hypot(q.x - p.x, q.y - p.y);
        if (len < 4) return quad;
        const Point2 dir{(q.x - p.x) / len, (q.y - p.y) / len};
        const Point2 out{dir.y, -dir.x};  // outward for clockwise corners (y down)
        const double reach = std::clamp(0.5 * len / kMarkerCells, 1.5, 4.0);
        const int lines_n = std::clamp(static_cast<int>(0.7 * len), 5, 60);
        std::vector<Point2> pts;
        for (int k = 0; k < lines_n; ++k) {
            const double t = 0.15 + 0.7 * (k + 0.5) / lines_n;
            const Point2 base{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)};
            if (auto u = edge_offset(gray, base, out, reach)) pts.push_back({base.x + *u * out.x, base.y + *u * out.y});
        }
        if (static_cast<int>(pts.size()) * 4 < lines_n) continue;
        lines[i] = robust_fit(std::move(pts));
    }
    Quad out = quad;
    for (int i = 0; i < 4; ++i) {
        const Line& a = lines[(i + 3) % 4];
        const Line& b = lines[i];
        if (!a.ok || !b.ok) continue;
        const double det = a.nx * b.ny - a.ny * b.nx;
        if (std::abs(det) < 1e-3) continue;
        const Point2 c{(a.c * b.ny - a.ny * b.c) / det, (a.nx * b.c - a.c * b.nx) / det};
        if (std::hypot(c.x - quad.corners[i].x, c.y - quad.corners[i].y) > limit[i]) continue;
        out.corners[i] = c;
    }
    return out;
}

}  // namespace

Quad refine_corners(const GrayU8& gray, const Quad& quad) {
    // A second pass re-centres the scanlines on the fitted edges, which makes
    // the result largely independent of the initial polygon.
    // Corners may move by at most a fifth of their shorter adjacent edge
    // (at least 3 px), relative to the input polygon.
    std::array<double, 4> limit{};
    for (int i = 0; i < 4; ++i) {
        const auto& p = quad.corners[i];
        const auto& a = quad.corners[(i + 3) % 4];
        const auto& b = quad.corners[(i + 1) % 4];
        limit[i] = std::max(3.0, 0.2 * std::min(std::hypot(p.x - a.x, p.y - a.y), std::hypot(p.x - b.x, p.y - b.y)));
    }
    const Quad first = refine_once(gray, quad, limit);
    Quad second = refine_once(gray, first, limit);
    for (int i = 0; i < 4; ++i) {
        const double moved = std::hypot(second.corners[i].x - quad.corners[i].x, second.corners[i].y - quad.corners[i].y);
        if (moved > limit[i]) second.corners[i] = first.corners[i];
    }
    return second;
}

}  // namespace uwmark::markers
