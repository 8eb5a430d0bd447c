#include <algorithm>
#include <limits>
#include <numeric>

#include "uwmark/enhance.hpp"

namespace uwmark::enhance {

namespace {

// Separable max filter over the clipped (2r+1)^2 window.
Plane max_filter(const Plane& in, int r) {
    Plane tmp(in.width, in.height), out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double m = in.at(x, y);
            for (int k = std::max(0, x - r); k <= std::min(in.width - 1, x + r); ++k) m = std::max(m, in.at(k, y));
            tmp.at(x, y) = m;
        }
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double m = tmp.at(x, y);
            for (int k = std::max(0, y - r); k <= std::min(in.height - 1, y + r); ++k) m = std::max(m, tmp.at(x, k));
            out.at(x, y) = m;
        }
    return out;
}

void require_rgb(const Image& img, const char* what) {
    if (img.channels() != 3) throw Error(ErrorCode::WrongChannelCount, std::string(what) + " needs RGB input");
}

}  // namespace

Plane bright_channel(const Image& rgb, int patch_radius) {
    require_rgb(rgb, "bright_channel");
    if (patch_radius < 0) throw Error(ErrorCode::InvalidArgument, "patch_radius must be >= 0");
    // Red kept, green and blue inverted, then max over channels.
    Plane pixel_max(rgb.width(), rgb.height());
    auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    for (std::size_t i = 0; i < pixel_max.size(); ++i) pixel_max.data[i] = std::max({r[i], 1.0 - g[i], 1.0 - b[i]});
    return max_filter(pixel_max, patch_radius);
}

RgbTriple estimate_atmospheric_light(const Image& rgb, const Plane& jbcp, const BcpParams& p) {
    require_rgb(rgb, "estimate_atmospheric_light");
    if (jbcp.width != rgb.width() || jbcp.height != rgb.height())
        throw Error(ErrorCode::InvalidArgument, "bright channel size mismatch");
    const std::size_t n = jbcp.size();
    const std::size_t n_dark =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(p.dark_fraction * n)), 1, n);

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto darker = [&](std::size_t a, std::size_t b) {
        return jbcp.data[a] < jbcp.data[b] || (jbcp.data[a] == jbcp.data[b] && a < b);
    };
    std::nth_element(idx.begin(), idx.begin() + (n_dark - 1), idx.end(), darker);
    idx.resize(n_dark);

    const Plane y = luma_plane(rgb);
    Plane y2(y.width, y.height);
    for (std::size_t i = 0; i < y.size(); ++i) y2.data[i] = y.data[i] * y.data[i];
    const Plane mean = box_mean(y, p.variance_radius);
    const Plane mean2 = box_mean(y2, p.variance_radius);

    std::size_t best = idx.front();
    double best_var = std::numeric_limits<double>::infinity();
    for (std::size_t i : idx) {
        const double var = mean2.data[i] - mean.data[i] * mean.data[i];
        if (var < best_var || (var == best_var && i < best)) {
            best_var = var;
            best = i;
        }
    }
    return {rgb.plane(0)[best], rgb.plane(1)[best], rgb.plane(2)[best]};
}

Plane transmittance(const Plane& jbcp, const RgbTriple& a, double t_floor) {
    for (double ac : a)
        if (ac >= 1.0 - 1e-3)
            throw Error(ErrorCode::DegenerateAtmosphere, "atmospheric light channel too close to 1");
    Plane t(jbcp.width, jbcp.height);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double sum = 0.0;
        for (double ac : a) sum += (jbcp.data[i] - ac) / (1.0 - ac);
        t.data[i] = std::clamp(sum / 3.0, t_floor, 1.0);
    }
    return t;
}

Plane guided_filter(const Plane& guide, const Plane& src, int radius, double eps) {
    if (guide.width != src.width || guide.height != src.height)
        throw Error(ErrorCode::InvalidArgument, "guided_filter: guide and source differ in size");
    const std::size_t n = src.size();
    Plane ii(src.width, src.height), ip(src.width, src.height);
    for (std::size_t i = 0; i < n; ++i) {
        ii.data[i] = guide.data[i] * guide.data[i];
        ip.data[i] = guide.data[i] * src.data[i];
    }
    const Plane mean_i = box_mean(guide, radius);
    const Plane mean_p = box_mean(src, radius);
    const Plane corr_ii = box_mean(ii, radius);
    const Plane corr_ip = box_mean(ip, radius);

    Plane a(src.width, src.height), b(src.width, src.height);
    for (std::size_t i = 0; i < n; ++i) {
        const double var = corr_ii.data[i] - mean_i.data[i] * mean_i.data[i];
        const double cov = corr_ip.data[i] - mean_i.data[i] * mean_p.data[i];
        a.data[i] = cov / (var + eps);
        b.data[i] = mean_p.data[i] - a.data[i] * mean_i.data[i];
    }
    const Plane mean_a = box_mean(a, radius);
    const Plane mean_b = box_mean(b, radius);
    Plane q(src.width, src.height);
    for (std::size_t i = 0; i < n; ++i) q.data[i] = mean_a.data[i] * guide.data[i] + mean_b.data[i];
    return q;
}

BcpResult bcp_restore(const Image& rgb, const BcpParams& p) {
    require_rgb(rgb, "bcp_restore");
    if (p.patch_radius < 1 || p.variance_radius < 1 || p.guided_radius < 1 || !(p.dark_fraction > 0.0) ||
        p.dark_fraction > 0.05 || !(p.guided_eps > 0.0))
        throw Error(ErrorCode::InvalidArgument, "invalid BCP parameters");
    const Plane jbcp = bright_channel(rgb, p.patch_radius);
    const RgbTriple a = estimate_atmospheric_light(rgb, jbcp, p);
    const Plane t_raw = transmittance(jbcp, a, p.t_floor);
    Plane t = guided_filter(luma_plane(rgb), t_raw, p.guided_radius, p.guided_eps);
    for (double& v : t.data) v = std::clamp(v, p.t_floor, 1.0);

    Image out(rgb.width(), rgb.height(), 3);
    for (int c = 0; c < 3; ++c) {
        auto src = rgb.plane(c);
        auto dst = out.plane(c);
        // (I - A)/t + A, written so that t == 1 reproduces I exactly.
        for (std::size_t i = 0; i < src.size(); ++i)
            dst[i] = clamp01(src[i] + (src[i] - a[c]) * (1.0 / t.data[i] - 1.0));
    }
    return {std::move(out), BcpDiagnostics{a, std::move(t)}};
}

}  // namespace uwmark::enhance
