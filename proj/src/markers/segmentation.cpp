#include <algorithm>
#include <cmath>

#include "uwmark/error.hpp"
#include "uwmark/markers.hpp"

namespace uwmark::markers {

std::size_t BinaryImage::count() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

BinaryImage adaptive_threshold(const GrayU8& gray, int window, double C) {
    return adaptive_threshold(gray, IntegralImage(gray), window, C);
}

namespace {

BinaryImage threshold_impl(const GrayU8& gray, const IntegralImage& ii, int window, double C, const BinaryImage* mask) {
    if (window < 3 || window % 2 == 0)
        throw Error(ErrorCode::InvalidArgument, "adaptive window must be odd and >= 3");
    if (mask && (mask->width != gray.width || mask->height != gray.height))
        throw Error(ErrorCode::InvalidArgument, "threshold mask size mismatch");
    const int w = gray.width, h = gray.height, r = window / 2;
    BinaryImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(h, y + r + 1);
        const std::size_t row = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            if (mask && !mask->data[row + x]) continue;
            const int x0 = std::max(0, x - r), x1 = std::min(w, x + r + 1);
            const double area = static_cast<double>(x1 - x0) * (y1 - y0);
            // I < mean - C, multiplied through by the area to avoid a division.
            const double v = gray.data[row + x];
            out.data[row + x] = (v + C) * area < ii.sum(x0, y0, x1, y1) ? 1 : 0;
        }
    }
    return out;
}

}  // namespace

BinaryImage adaptive_threshold(const GrayU8& gray, const IntegralImage& ii, int window, double C) {
    return threshold_impl(gray, ii, window, C, nullptr);
}

BinaryImage adaptive_threshold(const GrayU8& gray, const IntegralImage& ii, int window, double C,
                               const BinaryImage& mask) {
    return threshold_impl(gray, ii, window, C, &mask);
}

namespace {

// Neighbour offsets; increasing index is clockwise on screen (y down).
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

int direction_of(int dx, int dy) {
    for (int d = 0; d < 8; ++d)
        if (kDx[d] == dx && kDy[d] == dy) return d;
    return -1;
}

class Tracer {
public:
    explicit Tracer(const BinaryImage& bin) : w_(bin.width + 2), h_(bin.height + 2), f_(static_cast<std::size_t>(w_) * h_, 0) {
        for (int y = 0; y < bin.height; ++y)
            for (int x = 0; x < bin.width; ++x) f_[idx(x + 1, y + 1)] = bin.at(x, y) ? 1 : 0;
    }

    std::vector<Contour> run() {
        std::vector<Contour> out;
        int nbd = 1;
        for (int y = 1; y < h_ - 1; ++y) {
            for (int x = 1; x < w_ - 1; ++x) {
                const int v = f_[idx(x, y)];
                if (v == 0) continue;
                if (v == 1 && f_[idx(x - 1, y)] == 0) {
                    ++nbd;
                    out.push_back(follow(x, y, x - 1, y, nbd));
                } else if (v >= 1 && f_[idx(x + 1, y)] == 0) {
                    ++nbd;
                    follow(x, y, x + 1, y, nbd);  // hole border: traced for labelling only
                }
            }
        }
        return out;
    }

private:
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }

    Contour follow(int x, int y, int x2, int y2, int nbd) {
        Contour chain;
        // Clockwise search from (x2, y2) for the first non-zero neighbour.
        const int start = direction_of(x2 - x, y2 - y);
        int d1 = -1;
        for (int k = 0; k < 8; ++k) {
            const int d = (start + k) % 8;
            if (f_[idx(x + kDx[d], y + kDy[d])] != 0) {
                d1 = d;
                break;
            }
        }
        if (d1 < 0) {
            f_[idx(x, y)] = -nbd;
            chain.push_back({x - 1, y - 1});
            return chain;
        }
        const int x1 = x + kDx[d1], y1 = y + kDy[d1];
        int px = x1, py = y1;  // previous pixel (i2, j2)
        int cx = x, cy = y;    // current pixel (i3, j3)
        while (true) {
            chain.push_back({cx - 1, cy - 1});
            // Counter-clockwise search starting after the previous pixel.
            const int from = direction_of(px - cx, py - cy);
            bool east_zero = false;
            int d4 = from;
            for (int k = 1; k <= 8; ++k) {
                const int d = ((from - k) % 8 + 8) % 8;
                if (f_[idx(cx + kDx[d], cy + kDy[d])] != 0) {
                    d4 = d;
                    break;
                }
                if (d == 0) east_zero = true;
            }
            int& label = f_[idx(cx, cy)];
            if (east_zero) label = -nbd;
            else if (label == 1) label = nbd;
            const int nx = cx + kDx[d4], ny = cy + kDy[d4];
            if (nx == x && ny == y && cx == x1 && cy == y1) break;
            px = cx;
            py = cy;
            cx = nx;
            cy = ny;
        }
        return chain;
    }

    int w_, h_;
    std::vector<int> f_;
};

}  // namespace

std::vector<Contour> find_contours(const BinaryImage& bin) {
    if (bin.width == 0 || bin.height == 0) return {};
    return Tracer(bin).run();
}

}  // namespace uwmark::markers
