#include <algorithm>
#include <cmath>

#include "uwmark/enhance.hpp"

namespace uwmark::enhance {

namespace {

GrayU8 to_bytes(const Plane& in) {
    GrayU8 g(in.width, in.height);
    for (std::size_t i = 0; i < in.size(); ++i) g.data[i] = quantize(in.data[i]);
    return g;
}

Plane to_plane(const GrayU8& g) {
    Plane p(g.width, g.height);
    for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = g.data[i] / 255.0;
    return p;
}

std::uint8_t round_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

// ---- histogram equalization ---------------------------------------------------

std::array<std::uint8_t, 256> histogram_equalize_mapping(const GrayU8& g, bool* degenerate) {
    std::array<std::size_t, 256> hist{};
    for (auto v : g.data) ++hist[v];
    const double n = static_cast<double>(g.data.size());
    std::array<std::uint8_t, 256> map{};
    int first = 0;
    while (first < 255 && hist[first] == 0) ++first;
    const double cdf_min = hist[first] / n;
    if (degenerate) *degenerate = cdf_min >= 1.0;
    if (cdf_min >= 1.0) {
        for (int v = 0; v < 256; ++v) map[v] = static_cast<std::uint8_t>(v);
        return map;
    }
    std::size_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v];
        const double cdf = cum / n;
        map[v] = v < first ? 0 : round_byte(255.0 * (cdf - cdf_min) / (1.0 - cdf_min));
    }
    return map;
}

Plane histogram_equalize(const Plane& in) {
    GrayU8 g = to_bytes(in);
    bool degenerate = false;
    auto map = histogram_equalize_mapping(g, &degenerate);
    if (degenerate) return in;
    Plane out(in.width, in.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = map[g.data[i]] / 255.0;
    return out;
}

// ---- CLAHE --------------------------------------------------------------------

std::array<int, 256> clip_histogram(const std::array<int, 256>& hist, double limit) {
    const int cap = static_cast<int>(std::floor(limit));
    auto excess_at = [&](int level) {
        int e = 0;
        for (int h : hist) e += std::max(0, h - level);
        return e;
    };
    // Largest clip level whose uniformly redistributed excess keeps every bin
    // within the cap. level + excess(level)/256 is non-decreasing in level.
    int lo = 0, hi = std::max(0, cap);
    while (lo < hi) {
        const int mid = lo + (hi - lo + 1) / 2;
        if (mid + excess_at(mid) / 256 <= cap)
            lo = mid;
        else
            hi = mid - 1;
    }
    const int share = excess_at(lo) / 256;
    std::array<int, 256> out{};
    for (int v = 0; v < 256; ++v) out[v] = std::min(hist[v], lo) + share;
    return out;
}

std::vector<ClaheTile> clahe_tiles(const GrayU8& g, const ClaheParams& p) {
    if (p.tiles_x < 1 || p.tiles_y < 1 || p.clip_limit < 1.0)
        throw Error(ErrorCode::InvalidArgument, "CLAHE needs tiles >= 1 and clip_limit >= 1");
    if (g.width < p.tiles_x || g.height < p.tiles_y)
        throw Error(ErrorCode::ImageTooSmall, "image smaller than the CLAHE tile grid");
    std::vector<ClaheTile> tiles;
    tiles.reserve(static_cast<std::size_t>(p.tiles_x) * p.tiles_y);
    for (int ty = 0; ty < p.tiles_y; ++ty) {
        for (int tx = 0; tx < p.tiles_x; ++tx) {
            ClaheTile t{};
            t.x0 = tx * g.width / p.tiles_x;
            t.x1 = (tx + 1) * g.width / p.tiles_x;
            t.y0 = ty * g.height / p.tiles_y;
            t.y1 = (ty + 1) * g.height / p.tiles_y;
            std::array<int, 256> hist{};
            for (int y = t.y0; y < t.y1; ++y)
                for (int x = t.x0; x < t.x1; ++x) ++hist[g.at(x, y)];
            const double area = static_cast<double>(t.x1 - t.x0) * (t.y1 - t.y0);
            t.clipped_hist = clip_histogram(hist, p.clip_limit * area / 256.0);
            long total = 0;
            for (int h : t.clipped_hist) total += h;
            long cum = 0;
            for (int v = 0; v < 256; ++v) {
                cum += t.clipped_hist[v];
                t.mapping[v] = total > 0 ? round_byte(255.0 * cum / total) : static_cast<std::uint8_t>(v);
            }
            tiles.push_back(t);
        }
    }
    return tiles;
}

GrayU8 clahe(const GrayU8& g, const ClaheParams& p) {
    const auto tiles = clahe_tiles(g, p);
    // Tile centers along each axis; pixels interpolate between the two nearest.
    std::vector<double> cx(p.tiles_x), cy(p.tiles_y);
    for (int i = 0; i < p.tiles_x; ++i) cx[i] = 0.5 * (tiles[i].x0 + tiles[i].x1 - 1);
    for (int j = 0; j < p.tiles_y; ++j) cy[j] = 0.5 * (tiles[j * p.tiles_x].y0 + tiles[j * p.tiles_x].y1 - 1);

    struct Span {
        int lo, hi;
        double frac;
    };
    auto locate = [](const std::vector<double>& centers, double pos) {
        const int n = static_cast<int>(centers.size());
        if (pos <= centers.front()) return Span{0, 0, 0.0};
        if (pos >= centers.back()) return Span{n - 1, n - 1, 0.0};
        int i = 0;
        while (centers[i + 1] < pos) ++i;
        return Span{i, i + 1, (pos - centers[i]) / (centers[i + 1] - centers[i])};
    };
    std::vector<Span> xs(g.width);
    for (int x = 0; x < g.width; ++x) xs[x] = locate(cx, x);

    GrayU8 out(g.width, g.height);
    for (int y = 0; y < g.height; ++y) {
        const Span sy = locate(cy, y);
        for (int x = 0; x < g.width; ++x) {
            const Span& sx = xs[x];
            const std::uint8_t v = g.at(x, y);
            const double m00 = tiles[sy.lo * p.tiles_x + sx.lo].mapping[v];
            const double m10 = tiles[sy.lo * p.tiles_x + sx.hi].mapping[v];
            const double m01 = tiles[sy.hi * p.tiles_x + sx.lo].mapping[v];
            const double m11 = tiles[sy.hi * p.tiles_x + sx.hi].mapping[v];
            const double top = m00 + sx.frac * (m10 - m00);
            const double bottom = m01 + sx.frac * (m11 - m01);
            out.at(x, y) = round_byte(top + sy.frac * (bottom - top));
        }
    }
    return out;
}

Plane clahe(const Plane& in, const ClaheParams& p) { return to_plane(clahe(to_bytes(in), p)); }

// ---- white balance --------------------------------------------------------------

ChannelRange percentile_range(const std::array<std::size_t, 256>& hist, std::size_t total,
                              const WhiteBalanceParams& p) {
    ChannelRange r;
    const double black_count = p.black_percentile / 100.0 * static_cast<double>(total);
    const double white_count = (100.0 - p.white_percentile) / 100.0 * static_cast<double>(total);
    std::size_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v];
        if (static_cast<double>(cum) > black_count) {
            r.lo = v;
            break;
        }
    }
    cum = 0;
    for (int v = 255; v >= 0; --v) {
        cum += hist[v];
        if (static_cast<double>(cum) > white_count) {
            r.hi = v;
            break;
        }
    }
    return r;
}

namespace {

void check_wb(const WhiteBalanceParams& p) {
    if (!(p.black_percentile >= 0.0 && p.black_percentile < 50.0 && p.white_percentile > 50.0 &&
          p.white_percentile <= 100.0))
        throw Error(ErrorCode::InvalidArgument, "white balance percentiles must satisfy 0<=black<50<white<=100");
}

// Histograms come from pixels where mask is set (all pixels when mask is empty).
Image balance_with_mask(const Image& img, const std::vector<std::uint8_t>& mask, const WhiteBalanceParams& p) {
    check_wb(p);
    Image out(img.width(), img.height(), img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        auto src = img.plane(c);
        auto dst = out.plane(c);
        std::array<std::size_t, 256> hist{};
        std::size_t total = 0;
        for (std::size_t i = 0; i < src.size(); ++i) {
            if (!mask.empty() && !mask[i]) continue;
            ++hist[quantize(src[i])];
            ++total;
        }
        const ChannelRange r = percentile_range(hist, total, p);
        if (r.lo >= r.hi || (r.lo == 0 && r.hi == 255)) {
            std::copy(src.begin(), src.end(), dst.begin());
            continue;
        }
        // byte-scale arithmetic keeps grid values exact (e.g. the midpoint maps to 0.5)
        const double lo = r.lo, span = r.hi - r.lo;
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = clamp01((src[i] * 255.0 - lo) / span);
    }
    return out;
}

}  // namespace

Image white_balance(const Image& rgb, const WhiteBalanceParams& p) { return balance_with_mask(rgb, {}, p); }

Image mbuwwb(const Image& rgb, std::span<const Roi> rois, const WhiteBalanceParams& p) {
    std::vector<std::uint8_t> mask(rgb.plane_size(), 0);
    std::size_t covered = 0;
    for (const Roi& roi : rois) {
        const int x0 = std::max(0, roi.x), y0 = std::max(0, roi.y);
        const int x1 = std::min(rgb.width(), roi.x + roi.w), y1 = std::min(rgb.height(), roi.y + roi.h);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                auto& m = mask[static_cast<std::size_t>(y) * rgb.width() + x];
                covered += m == 0;
                m = 1;
            }
    }
    if (covered == 0) return white_balance(rgb, p);
    if (covered == mask.size()) mask.clear();
    return balance_with_mask(rgb, mask, p);
}

}  // namespace uwmark::enhance
