#include <algorithm>
#include <cmath>

#include "uwmark/enhance.hpp"

namespace uwmark::enhance {

namespace {

// Binomial 5-tap kernel [1 4 6 4 1]/16; weights renormalized at borders.
constexpr double kTap[5] = {1.0, 4.0, 6.0, 4.0, 1.0};

Plane reduce(const Plane& in) {
    const int w = (in.width + 1) / 2, h = (in.height + 1) / 2;
    Plane tmp(w, in.height), out(w, h);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, norm = 0.0;
            for (int k = -2; k <= 2; ++k) {
                const int sx = 2 * x + k;
                if (sx < 0 || sx >= in.width) continue;
                acc += kTap[k + 2] * in.at(sx, y);
                norm += kTap[k + 2];
            }
            tmp.at(x, y) = acc / norm;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, norm = 0.0;
            for (int k = -2; k <= 2; ++k) {
                const int sy = 2 * y + k;
                if (sy < 0 || sy >= in.height) continue;
                acc += kTap[k + 2] * tmp.at(x, sy);
                norm += kTap[k + 2];
            }
            out.at(x, y) = acc / norm;
        }
    return out;
}

// Upsamples to (w,h): each fine sample averages the coarse samples whose
// doubled position lies within +-2, weighted by the binomial taps.
Plane expand(const Plane& in, int w, int h) {
    Plane tmp(w, in.height), out(w, h);
    auto axis = [](int pos, int coarse_len, auto&& fetch) {
        double acc = 0.0, norm = 0.0;
        for (int k = -2; k <= 2; ++k) {
            const int fine = pos + k;
            if (fine % 2 != 0) continue;
            const int c = fine / 2;
            if (fine < 0 || c >= coarse_len) continue;
            acc += kTap[k + 2] * fetch(c);
            norm += kTap[k + 2];
        }
        return acc / norm;
    };
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < w; ++x) tmp.at(x, y) = axis(x, in.width, [&](int c) { return in.at(c, y); });
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = axis(y, in.height, [&](int c) { return tmp.at(x, c); });
    return out;
}

std::vector<Plane> gaussian_pyramid(const Plane& base, int levels) {
    std::vector<Plane> pyr{base};
    for (int l = 1; l < levels; ++l) pyr.push_back(reduce(pyr.back()));
    return pyr;
}

std::vector<Plane> laplacian_pyramid(const Plane& base, int levels) {
    std::vector<Plane> g = gaussian_pyramid(base, levels);
    for (int l = 0; l + 1 < levels; ++l) {
        const Plane up = expand(g[l + 1], g[l].width, g[l].height);
        for (std::size_t i = 0; i < up.size(); ++i) g[l].data[i] -= up.data[i];
    }
    return g;
}

Plane laplacian_abs(const Plane& p) {
    Plane out(p.width, p.height);
    auto at = [&](int x, int y) {
        return p.at(std::clamp(x, 0, p.width - 1), std::clamp(y, 0, p.height - 1));
    };
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
            out.at(x, y) = std::abs(at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y));
    return out;
}

// Distance of the blurred color from the global mean color.
Plane saliency(const Image& img) {
    const Image blurred = gaussian_filter(img, GaussianParams{1.0, 0});
    double mean[3] = {0, 0, 0};
    for (int c = 0; c < img.channels(); ++c) {
        for (double v : img.plane(c)) mean[c] += v;
        mean[c] /= static_cast<double>(img.plane_size());
    }
    Plane out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double d2 = 0.0;
        for (int c = 0; c < img.channels(); ++c) {
            const double d = blurred.plane(c)[i] - mean[c];
            d2 += d * d;
        }
        out.data[i] = std::sqrt(d2);
    }
    return out;
}

constexpr double kWeightFloor = 1e-6;

}  // namespace

Image gray_world(const Image& rgb) {
    Image out = rgb;
    double means[3] = {0, 0, 0};
    double gray = 0.0;
    for (int c = 0; c < rgb.channels(); ++c) {
        for (double v : rgb.plane(c)) means[c] += v;
        means[c] /= static_cast<double>(rgb.plane_size());
        gray += means[c];
    }
    gray /= rgb.channels();
    for (int c = 0; c < rgb.channels(); ++c) {
        if (means[c] <= 0.0) continue;
        const double gain = gray / means[c];
        for (double& v : out.plane(c)) v = clamp01(v * gain);
    }
    return out;
}

std::vector<Plane> fusion_weights(std::span<const Image> inputs) {
    std::vector<Plane> w;
    for (const Image& in : inputs) {
        Plane lap = laplacian_abs(luma_plane(in));
        const Plane sal = saliency(in);
        for (std::size_t i = 0; i < lap.size(); ++i) lap.data[i] += sal.data[i] + kWeightFloor;
        w.push_back(std::move(lap));
    }
    const std::size_t n = w.front().size();
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const Plane& p : w) sum += p.data[i];
        for (Plane& p : w) p.data[i] /= sum;
    }
    return w;
}

Image fusion_blend(std::span<const Image> inputs, std::span<const Plane> weights, int levels) {
    if (inputs.empty() || inputs.size() != weights.size())
        throw Error(ErrorCode::InvalidArgument, "fusion_blend needs one weight map per input");
    const Image& first = inputs.front();
    if (levels < 1) throw Error(ErrorCode::InvalidArgument, "pyramid_levels must be >= 1");
    if ((1LL << levels) > std::min(first.width(), first.height()))
        throw Error(ErrorCode::ImageTooSmall, "pyramid_levels exceeds log2 of the smaller image side");

    std::vector<std::vector<Plane>> weight_pyr;
    for (const Plane& w : weights) weight_pyr.push_back(gaussian_pyramid(w, levels));

    std::vector<Plane> channels;
    for (int c = 0; c < first.channels(); ++c) {
        std::vector<Plane> acc;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            std::vector<Plane> lap = laplacian_pyramid(inputs[k].channel(c), levels);
            if (acc.empty()) {
                acc.resize(lap.size());
                for (std::size_t l = 0; l < lap.size(); ++l) acc[l] = Plane(lap[l].width, lap[l].height);
            }
            for (std::size_t l = 0; l < lap.size(); ++l)
                for (std::size_t i = 0; i < lap[l].size(); ++i)
                    acc[l].data[i] += weight_pyr[k][l].data[i] * lap[l].data[i];
        }
        Plane result = acc.back();
        for (int l = levels - 2; l >= 0; --l) {
            Plane up = expand(result, acc[l].width, acc[l].height);
            for (std::size_t i = 0; i < up.size(); ++i) up.data[i] += acc[l].data[i];
            result = std::move(up);
        }
        channels.push_back(std::move(result));
    }
    return Image::from_planes(channels);
}

Image fusion_enhance(const Image& rgb, const FusionParams& p) {
    if (rgb.channels() != 3) throw Error(ErrorCode::WrongChannelCount, "fusion needs RGB input");
    if (p.pyramid_levels < 1) throw Error(ErrorCode::InvalidArgument, "pyramid_levels must be >= 1");
    if ((1LL << p.pyramid_levels) > std::min(rgb.width(), rgb.height()))
        throw Error(ErrorCode::ImageTooSmall, "pyramid_levels exceeds log2 of the smaller image side");

    Image balanced = gray_world(rgb);
    Image yuv = rgb_to_yuv(balanced);
    Plane y = bilateral_filter(yuv.channel(0), p.bilateral);
    yuv.set_channel(0, clahe(y, p.clahe));
    Image contrasted = yuv_to_rgb(yuv);

    const std::vector<Image> inputs{std::move(balanced), std::move(contrasted)};
    const std::vector<Plane> weights = fusion_weights(inputs);
    return fusion_blend(inputs, weights, p.pyramid_levels);
}

}  // namespace uwmark::enhance
