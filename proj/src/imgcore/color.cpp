#include <array>

#include "uwmark/image.hpp"

namespace uwmark {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// BT.601 full range; U and V rows are offset by +0.5 after the product.
constexpr Mat3 kRgbToYuv{{
    {0.299, 0.587, 0.114},
    {-0.168736, -0.331264, 0.5},
    {0.5, -0.418688, -0.081312},
}};

Mat3 invert(const Mat3& m) {
    const double a = m[0][0], b = m[0][1], c = m[0][2];
    const double d = m[1][0], e = m[1][1], f = m[1][2];
    const double g = m[2][0], h = m[2][1], i = m[2][2];
    const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    return Mat3{{
        {(e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det},
        {(f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det},
        {(d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det},
    }};
}

const Mat3& yuv_to_rgb_matrix() {
    static const Mat3 inv = invert(kRgbToYuv);
    return inv;
}

void require_three(const Image& img, const char* what) {
    if (img.channels() != 3)
        throw Error(ErrorCode::WrongChannelCount, std::string(what) + " needs a 3-channel image");
}

}  // namespace

double luma(double r, double g, double b) {
    const auto& m = kRgbToYuv;
    return clamp01(m[0][0] * r + m[0][1] * g + m[0][2] * b);
}

Image rgb_to_yuv(const Image& rgb) {
    require_three(rgb, "rgb_to_yuv");
    Image out(rgb.width(), rgb.height(), 3);
    auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    auto y = out.plane(0), u = out.plane(1), v = out.plane(2);
    const auto& m = kRgbToYuv;
    for (std::size_t i = 0; i < r.size(); ++i) {
        y[i] = luma(r[i], g[i], b[i]);
        u[i] = clamp01(m[1][0] * r[i] + m[1][1] * g[i] + m[1][2] * b[i] + 0.5);
        v[i] = clamp01(m[2][0] * r[i] + m[2][1] * g[i] + m[2][2] * b[i] + 0.5);
    }
    return out;
}

Image yuv_to_rgb(const Image& yuv) {
    require_three(yuv, "yuv_to_rgb");
    Image out(yuv.width(), yuv.height(), 3);
    auto y = yuv.plane(0), u = yuv.plane(1), v = yuv.plane(2);
    auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
    const auto& m = yuv_to_rgb_matrix();
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double yy = y[i], uu = u[i] - 0.5, vv = v[i] - 0.5;
        r[i] = clamp01(m[0][0] * yy + m[0][1] * uu + m[0][2] * vv);
        g[i] = clamp01(m[1][0] * yy + m[1][1] * uu + m[1][2] * vv);
        b[i] = clamp01(m[2][0] * yy + m[2][1] * uu + m[2][2] * vv);
    }
    return out;
}

Plane luma_plane(const Image& img) {
    if (img.channels() == 1) return img.channel(0);
    Plane out(img.width(), img.height());
    auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
    for (std::size_t i = 0; i < r.size(); ++i) out.data[i] = luma(r[i], g[i], b[i]);
    return out;
}

GrayU8 luma_u8(const Image& img) {
    GrayU8 out(img.width(), img.height());
    if (img.channels() == 1) {
        auto s = img.plane(0);
        for (std::size_t i = 0; i < s.size(); ++i) out.data[i] = quantize(s[i]);
        return out;
    }
    auto r = img.plane(0), g = img.plane(1), b = img.plane(2);
    for (std::size_t i = 0; i < r.size(); ++i) out.data[i] = quantize(luma(r[i], g[i], b[i]));
    return out;
}

}  // namespace uwmark
