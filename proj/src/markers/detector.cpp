#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "uwmark/error.hpp"
#include "uwmark/markers.hpp"

namespace uwmark::markers {
namespace {

void check_params(const DetectorParams& p) {
    if (p.adaptive_window < 3 || p.adaptive_window % 2 == 0)
        throw Error(ErrorCode::InvalidArgument, "adaptive_window must be odd and >= 3");
    if (!(p.min_perimeter_rate > 0 && p.min_perimeter_rate < p.max_perimeter_rate))
        throw Error(ErrorCode::InvalidArgument, "need 0 < min_perimeter_rate < max_perimeter_rate");
}

double mean_corner_distance(const DetectedMarker& a, const DetectedMarker& b) {
    double best = 1e300;
    for (int s = 0; s < 4; ++s) {
        double d = 0;
        for (int i = 0; i < 4; ++i) {
            const auto& p = a.corners[i];
            const auto& q = b.corners[(i + s) % 4];
            d += std::hypot(p.x - q.x, p.y - q.y) / 4;
        }
        best = std::min(best, d);
    }
    return best;
}

}  // namespace

std::vector<DetectedMarker> detect_from_binary(const GrayU8& gray, const BinaryImage& bin,
                                               const MarkerDictionary& dict, const DetectorParams& params) {
    check_params(params);
    const auto contours = find_contours(bin);
    const auto quads = approx_quads(contours, params, gray.width, gray.height);
    std::vector<DetectedMarker> cands;
    for (const auto& q : quads) {
        BitMatrix bits;
        try {
            bits = sample_bits(gray, quad_homography(q), params);
        } catch (const Error&) {
            continue;  // degenerate or out-of-image candidates are simply not markers
        }
        if (bits.border_violations > params.max_border_violations) continue;
        const auto dec = decode_bits(bits.payload(), dict);
        if (!dec) continue;
        const Quad refined = refine_corners(gray, q);
        DetectedMarker m;
        m.id = dec->id;
        m.rotation = dec->rotation;
        m.hamming_errors = dec->hamming_errors;
        for (int i = 0; i < 4; ++i) m.corners[i] = refined.corners[(i + dec->rotation) % 4];
        cands.push_back(m);
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const auto& a, const auto& b) { return a.hamming_errors < b.hamming_errors; });
    std::vector<DetectedMarker> out;
    for (const auto& c : cands) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const auto& k) {
            return mean_corner_distance(c, k) < params.duplicate_distance_px;
        });
        if (!dup) out.push_back(c);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.id != b.id) return a.id < b.id;
        if (a.corners[0].y != b.corners[0].y) return a.corners[0].y < b.corners[0].y;
        return a.corners[0].x < b.corners[0].x;
    });
    return out;
}

std::vector<DetectedMarker> detect(const GrayU8& gray, const MarkerDictionary& dict, const DetectorParams& params) {
    check_params(params);
    const auto bin = adaptive_threshold(gray, params.adaptive_window, params.adaptive_C);
    return detect_from_binary(gray, bin, dict, params);
}

BinaryImage uw_contour_mask(const GrayU8& gray, const DetectorParams& params, const UwMaskParams& mask) {
    const int w = gray.width, h = gray.height;
    const int f = std::max(1, mask.coarse_downsample);
    GrayU8 small;
    small.width = (w + f - 1) / f;
    small.height = (h + f - 1) / f;
    small.data.resize(static_cast<std::size_t>(small.width) * small.height);
    for (int y = 0; y < small.height; ++y) {
        for (int x = 0; x < small.width; ++x) {
            int sum = 0, n = 0;
            for (int dy = 0; dy < f && y * f + dy < h; ++dy)
                for (int dx = 0; dx < f && x * f + dx < w; ++dx, ++n) sum += gray.at(x * f + dx, y * f + dy);
            small.data[static_cast<std::size_t>(y) * small.width + x] = static_cast<std::uint8_t>((sum + n / 2) / n);
        }
    }
    const int window = std::max(3, (mask.coarse_window / f) | 1);
    const auto coarse = adaptive_threshold(small, window, mask.coarse_C);
    const double dim = std::max(w, h);
    const double min_pts = mask.min_contour_fraction * params.min_perimeter_rate * dim / f;
    const double max_pts = params.max_perimeter_rate * dim / f;
    BinaryImage out(w, h);
    for (const auto& c : find_contours(coarse)) {
        if (c.size() < min_pts || c.size() > max_pts) continue;
        int x0 = small.width, y0 = small.height, x1 = -1, y1 = -1;
        for (const auto& p : c) {
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
        x0 = std::max(0, x0 * f - mask.dilate_radius);
        y0 = std::max(0, y0 * f - mask.dilate_radius);
        x1 = std::min(w - 1, x1 * f + f - 1 + mask.dilate_radius);
        y1 = std::min(h - 1, y1 * f + f - 1 + mask.dilate_radius);
        for (int y = y0; y <= y1; ++y)
            std::fill_n(out.data.begin() + static_cast<std::ptrdiff_t>(y) * w + x0, x1 - x0 + 1, std::uint8_t{1});
    }
    return out;
}

UwDetection detect_uw(const GrayU8& gray, const MarkerDictionary& dict, const DetectorParams& params,
                      const UwMaskParams& mask) {
    check_params(params);
    const auto region = uw_contour_mask(gray, params, mask);
    const auto bin = adaptive_threshold(gray, IntegralImage(gray), params.adaptive_window, mask.aggressive_C, region);
    UwDetection out;
    out.contour_foreground = bin.count();
    out.markers = detect_from_binary(gray, bin, dict, params);
    return out;
}

std::string format_detection(int frame_id, const DetectedMarker& m) {
    std::string s = std::to_string(frame_id) + ' ' + std::to_string(m.id);
    char buf[64];
    for (const auto& c : m.corners) {
        std::snprintf(buf, sizeof buf, " %.4f %.4f", c.x, c.y);
        s += buf;
    }
    s += ' ' + std::to_string(m.rotation) + ' ' + std::to_string(m.hamming_errors);
    return s;
}

DetectedMarker parse_detection(const std::string& line, int* frame_id) {
    std::istringstream in(line);
    DetectedMarker m;
    int frame = 0;
    in >> frame >> m.id;
    for (auto& c : m.corners) in >> c.x >> c.y;
    in >> m.rotation >> m.hamming_errors;
    std::string extra;
    if (!in || (in >> extra)) throw Error(ErrorCode::SchemaMismatch, "malformed detection line '" + line + "'");
    if (frame_id) *frame_id = frame;
    return m;
}

}  // namespace uwmark::markers
