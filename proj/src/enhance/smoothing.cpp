#include <algorithm>
#include <cmath>

#include "uwmark/enhance.hpp"

namespace uwmark::enhance {

namespace {

int auto_radius(double sigma) { return std::max(1, static_cast<int>(std::ceil(3.0 * sigma))); }

template <typename Fn>
Image per_channel(const Image& in, Fn&& fn) {
    Image out(in.width(), in.height(), in.channels());
    for (int c = 0; c < in.channels(); ++c) out.set_channel(c, fn(in.channel(c)));
    return out;
}

// One separable pass along x (horizontal=true) or y with border renormalization.
Plane convolve_1d(const Plane& in, const std::vector<double>& kernel, int radius, bool horizontal) {
    Plane out(in.width, in.height);
    const int w = in.width, h = in.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int pos = horizontal ? x : y;
            const int len = horizontal ? w : h;
            const int lo = std::max(-radius, -pos), hi = std::min(radius, len - 1 - pos);
            double acc = 0.0, norm = 0.0;
            for (int k = lo; k <= hi; ++k) {
                const double wk = kernel[k + radius];
                acc += wk * (horizontal ? in.at(x + k, y) : in.at(x, y + k));
                norm += wk;
            }
            out.at(x, y) = acc / norm;
        }
    }
    return out;
}

}  // namespace

int GaussianParams::resolved_radius() const { return radius > 0 ? radius : auto_radius(sigma_space); }

int BilateralParams::resolved_radius() const { return radius > 0 ? radius : auto_radius(sigma_space); }

Plane gaussian_filter(const Plane& in, const GaussianParams& p) {
    if (!(p.sigma_space > 0.0)) throw Error(ErrorCode::InvalidArgument, "gaussian sigma_space must be > 0");
    const int r = p.resolved_radius();
    std::vector<double> kernel(2 * r + 1);
    for (int k = -r; k <= r; ++k) kernel[k + r] = std::exp(-(k * k) / (2.0 * p.sigma_space * p.sigma_space));
    // The 2-D clipped window is a product of 1-D clipped ranges, so per-axis
    // renormalization equals renormalizing the full 2-D kernel.
    return convolve_1d(convolve_1d(in, kernel, r, true), kernel, r, false);
}

Image gaussian_filter(const Image& in, const GaussianParams& p) {
    return per_channel(in, [&](const Plane& pl) { return gaussian_filter(pl, p); });
}

Plane median_filter(const Plane& in, const MedianParams& p) {
    if (p.window < 3 || p.window % 2 == 0)
        throw Error(ErrorCode::InvalidArgument, "median window must be odd and >= 3");
    const int r = p.window / 2;
    Plane out(in.width, in.height);
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(p.window) * p.window);
    for (int y = 0; y < in.height; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(in.height - 1, y + r);
        for (int x = 0; x < in.width; ++x) {
            const int x0 = std::max(0, x - r), x1 = std::min(in.width - 1, x + r);
            buf.clear();
            for (int yy = y0; yy <= y1; ++yy)
                for (int xx = x0; xx <= x1; ++xx) buf.push_back(in.at(xx, yy));
            auto mid = buf.begin() + (buf.size() - 1) / 2;
            std::nth_element(buf.begin(), mid, buf.end());
            out.at(x, y) = *mid;
        }
    }
    return out;
}

Image median_filter(const Image& in, const MedianParams& p) {
    return per_channel(in, [&](const Plane& pl) { return median_filter(pl, p); });
}

Plane bilateral_filter(const Plane& in, const BilateralParams& p) {
    if (!(p.sigma_space > 0.0) || !(p.sigma_color > 0.0))
        throw Error(ErrorCode::InvalidArgument, "bilateral sigmas must be > 0");
    const int r = p.resolved_radius();
    const int side = 2 * r + 1;
    std::vector<double> spatial(static_cast<std::size_t>(side) * side);
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            spatial[(dy + r) * side + dx + r] =
                std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma_space * p.sigma_space));
    const double range_coeff = -1.0 / (2.0 * p.sigma_color * p.sigma_color);

    Plane out(in.width, in.height);
    for (int y = 0; y < in.height; ++y) {
        const int y0 = std::max(-r, -y), y1 = std::min(r, in.height - 1 - y);
        for (int x = 0; x < in.width; ++x) {
            const int x0 = std::max(-r, -x), x1 = std::min(r, in.width - 1 - x);
            const double center = in.at(x, y);
            double acc = 0.0, norm = 0.0;
            for (int dy = y0; dy <= y1; ++dy) {
                const double* row = &in.data[static_cast<std::size_t>(y + dy) * in.width + x];
                const double* ws = &spatial[(dy + r) * side + r];
                for (int dx = x0; dx <= x1; ++dx) {
                    const double d = (row[dx] - center) * 255.0;
                    const double wgt = ws[dx] * std::exp(d * d * range_coeff);
                    acc += wgt * row[dx];
                    norm += wgt;
                }
            }
            out.at(x, y) = acc / norm;
        }
    }
    return out;
}

Image bilateral_filter(const Image& in, const BilateralParams& p) {
    return per_channel(in, [&](const Plane& pl) { return bilateral_filter(pl, p); });
}

Plane deblur(const Plane& in, const DeblurParams& p) {
    if (!(p.sigma_space > 0.0) || p.weight < 0.0)
        throw Error(ErrorCode::InvalidArgument, "deblur needs sigma_space > 0 and weight >= 0");
    if (p.weight == 0.0) return in;
    Plane low = gaussian_filter(in, GaussianParams{p.sigma_space, 0});
    Plane out(in.width, in.height);
    for (std::size_t i = 0; i < in.size(); ++i)
        out.data[i] = clamp01((1.0 + p.weight) * in.data[i] - p.weight * low.data[i]);
    return out;
}

Image deblur(const Image& in, const DeblurParams& p) {
    return per_channel(in, [&](const Plane& pl) { return deblur(pl, p); });
}

}  // namespace uwmark::enhance
