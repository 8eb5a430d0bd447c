#include "uwmark/image.hpp"

#include <algorithm>
#include <string>

namespace uwmark {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::TruncatedData: return "TruncatedData";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::WrongChannelCount: return "WrongChannelCount";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ImageTooSmall: return "ImageTooSmall";
        case ErrorCode::DegenerateAtmosphere: return "DegenerateAtmosphere";
        case ErrorCode::UnknownFilter: return "UnknownFilter";
        case ErrorCode::GenerationStalled: return "GenerationStalled";
        case ErrorCode::MalformedDictFile: return "MalformedDictFile";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::DegenerateQuad: return "DegenerateQuad";
        case ErrorCode::OutOfImage: return "OutOfImage";
        case ErrorCode::UnknownId: return "UnknownId";
        case ErrorCode::SingularHomography: return "SingularHomography";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::DatasetError: return "DatasetError";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    }
    return "Unknown";
}

namespace {

void check_dims(int width, int height, int channels) {
    if (width < 1 || height < 1)
        throw Error(ErrorCode::InvalidArgument,
                    "image dimensions must be positive, got " + std::to_string(width) + "x" +
                        std::to_string(height));
    if (channels != 1 && channels != 3)
        throw Error(ErrorCode::WrongChannelCount,
                    "expected 1 or 3 channels, got " + std::to_string(channels));
}

}  // namespace

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
    check_dims(width, height, channels);
    samples_.assign(plane_size() * channels, clamp01(fill));
}

Image::Image(int width, int height, int channels, std::vector<double> samples)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
    check_dims(width, height, channels);
    if (samples_.size() != plane_size() * channels)
        throw Error(ErrorCode::InvalidArgument, "sample count does not match dimensions");
    for (double s : samples_)
        if (!std::isfinite(s) || s < 0.0 || s > 1.0)
            throw Error(ErrorCode::InvalidArgument, "sample outside [0,1]");
}

Image Image::from_planes(std::span<const Plane> planes) {
    if (planes.size() != 1 && planes.size() != 3)
        throw Error(ErrorCode::WrongChannelCount, "from_planes needs 1 or 3 planes");
    Image out(planes[0].width, planes[0].height, static_cast<int>(planes.size()));
    for (std::size_t c = 0; c < planes.size(); ++c) out.set_channel(static_cast<int>(c), planes[c]);
    return out;
}

Plane Image::channel(int c) const {
    Plane p;
    p.width = width_;
    p.height = height_;
    auto src = plane(c);
    p.data.assign(src.begin(), src.end());
    return p;
}

void Image::set_channel(int c, const Plane& p) {
    if (p.width != width_ || p.height != height_)
        throw Error(ErrorCode::InvalidArgument, "plane size mismatch");
    auto dst = plane(c);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = clamp01(p.data[i]);
}

Image gray_to_image(const GrayU8& g) {
    Image out(g.width, g.height, 1);
    auto dst = out.plane(0);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = g.data[i] / 255.0;
    return out;
}

// ---- integral images --------------------------------------------------------

IntegralImage::IntegralImage(std::span<const double> samples, int width, int height)
    : width_(width), height_(height),
      table_(static_cast<std::size_t>(width + 1) * (height + 1), 0.0) {
    const std::size_t stride = width + 1;
    for (int y = 0; y < height; ++y) {
        double row = 0.0;
        const double* src = samples.data() + static_cast<std::size_t>(y) * width;
        double* above = table_.data() + y * stride;
        double* cur = above + stride;
        for (int x = 0; x < width; ++x) {
            row += src[x];
            cur[x + 1] = above[x + 1] + row;
        }
    }
}

IntegralImage::IntegralImage(const Plane& p) : IntegralImage(p.data, p.width, p.height) {}

IntegralImage::IntegralImage(const GrayU8& g)
    : width_(g.width), height_(g.height),
      table_(static_cast<std::size_t>(g.width + 1) * (g.height + 1), 0.0) {
    const std::size_t stride = width_ + 1;
    for (int y = 0; y < height_; ++y) {
        // Exact in double: row sums stay far below 2^53.
        double row = 0.0;
        const std::uint8_t* src = g.data.data() + static_cast<std::size_t>(y) * width_;
        double* above = table_.data() + y * stride;
        double* cur = above + stride;
        for (int x = 0; x < width_; ++x) {
            row += src[x];
            cur[x + 1] = above[x + 1] + row;
        }
    }
}

IntegralImage integral(const Plane& p) { return IntegralImage(p); }

Plane box_mean(const Plane& p, int radius) {
    if (radius < 0) throw Error(ErrorCode::InvalidArgument, "box_mean radius must be >= 0");
    if (radius == 0) return p;
    IntegralImage ii(p);
    Plane out(p.width, p.height);
    for (int y = 0; y < p.height; ++y) {
        const int y0 = std::max(0, y - radius), y1 = std::min(p.height, y + radius + 1);
        for (int x = 0; x < p.width; ++x) {
            const int x0 = std::max(0, x - radius), x1 = std::min(p.width, x + radius + 1);
            const double area = static_cast<double>(x1 - x0) * (y1 - y0);
            out.at(x, y) = ii.sum(x0, y0, x1, y1) / area;
        }
    }
    return out;
}

}  // namespace uwmark
