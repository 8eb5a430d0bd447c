#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "uwmark/error.hpp"

namespace uwmark {

/// Single-channel raster of doubles with no range restriction. Used for
/// intermediate quantities (transmittance, variances, weights, pyramids).
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return data.size(); }
};

/// Planar raster with 1 or 3 channels and samples normalized to [0,1].
///
/// Samples are stored channel-planar: plane c occupies
/// [c*width*height, (c+1)*width*height), each plane row-major. Three-channel
/// images are R,G,B unless a function documents otherwise (the YUV helpers).
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0);
    /// Validates dimensions, sample count and that every sample is finite and in [0,1].
    Image(int width, int height, int channels, std::vector<double> samples);

    static Image from_planes(std::span<const Plane> planes);  // clamps to [0,1]

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return samples_.empty(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }

    double& at(int c, int x, int y) { return samples_[index(c, x, y)]; }
    double at(int c, int x, int y) const { return samples_[index(c, x, y)]; }

    std::span<double> plane(int c) { return {samples_.data() + c * plane_size(), plane_size()}; }
    std::span<const double> plane(int c) const {
        return {samples_.data() + c * plane_size(), plane_size()};
    }
    std::span<const double> samples() const { return samples_; }
    std::span<double> samples() { return samples_; }

    Plane channel(int c) const;
    void set_channel(int c, const Plane& p);  // clamps to [0,1]

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int c, int x, int y) const {
        return static_cast<std::size_t>(c) * plane_size() + static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> samples_;
};

/// 8-bit single-channel raster; the detector's working format.
struct GrayU8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayU8() = default;
    GrayU8(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    friend bool operator==(const GrayU8&, const GrayU8&) = default;
};

/// Summed-area table: entry (x,y) holds the sum over [0,x)x[0,y).
class IntegralImage {
public:
    explicit IntegralImage(const Plane& p);
    explicit IntegralImage(const GrayU8& g);
    IntegralImage(std::span<const double> samples, int width, int height);

    int width() const { return width_; }    // source width
    int height() const { return height_; }  // source height
    double at(int x, int y) const { return table_[static_cast<std::size_t>(y) * (width_ + 1) + x]; }

    /// Sum over the half-open rectangle [x0,x1)x[y0,y1).
    double sum(int x0, int y0, int x1, int y1) const {
        return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> table_;
};

/// Round-half-up quantization of a normalized sample to a byte.
inline std::uint8_t quantize(double s) {
    double v = std::floor(s * 255.0 + 0.5);
    if (v <= 0.0) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(v);
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// ---- file I/O ---------------------------------------------------------------

/// Reads binary PGM (P5), binary PPM (P6) or raw planar YUV (`.yuv` with a
/// `<name>.yuvhdr` sidecar holding "width height"). YUV files load as a
/// 3-channel image whose channels are Y,U,V (no color conversion).
Image load_image(const std::filesystem::path& path);

/// Writes PGM for 1 channel and PPM for 3 channels. A `.yuv` extension writes
/// the three planes as-is plus the sidecar header.
void save_image(const Image& img, const std::filesystem::path& path);

// ---- color ------------------------------------------------------------------

/// BT.601 full-range RGB -> YUV with U,V centered at 0.5; output clamped.
Image rgb_to_yuv(const Image& rgb);
/// Exact matrix inverse of rgb_to_yuv; output clamped.
Image yuv_to_rgb(const Image& yuv);
/// Luma of one RGB triple, as stored by rgb_to_yuv.
double luma(double r, double g, double b);
/// Luma plane of an image (channel 0 for 1-channel input).
Plane luma_plane(const Image& img);
/// 1-channel input quantizes directly; 3-channel input quantizes the Y of rgb_to_yuv.
GrayU8 luma_u8(const Image& img);

Image gray_to_image(const GrayU8& g);

// ---- shared raster primitives ----------------------------------------------

IntegralImage integral(const Plane& p);

/// Mean over the (2r+1)^2 window clipped to the image, divided by the clipped area.
Plane box_mean(const Plane& p, int radius);

}  // namespace uwmark
