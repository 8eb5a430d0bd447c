#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "uwmark/image.hpp"

namespace uwmark::markers {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct PointI {
    int x = 0;
    int y = 0;
    friend bool operator==(const PointI&, const PointI&) = default;
};

// ---- dictionary ---------------------------------------------------------------

inline constexpr int kCodeGrid = 6;   // payload bits per side
inline constexpr int kBorderBits = 1;
inline constexpr int kMarkerCells = kCodeGrid + 2 * kBorderBits;  // 8

/// 36-bit payload; bit (row*6 + col) is the cell at that row/column, 1 = white.
using Code = std::uint64_t;

inline bool code_bit(Code c, int row, int col) { return (c >> (row * kCodeGrid + col)) & 1U; }
/// Rotates the 6x6 payload by 90 degrees clockwise, `quarter_turns` times.
Code rotate_code(Code c, int quarter_turns = 1);
int hamming(Code a, Code b);
/// Minimum Hamming distance between `a` and every rotation of `b`.
int rotation_aware_distance(Code a, Code b);
/// Minimum distance between `a` and its own 90/180/270 degree rotations.
int self_rotation_distance(Code a);
std::string code_to_string(Code c);
Code code_from_string(const std::string& s);

struct MarkerDictionary {
    int grid = kCodeGrid;
    std::vector<Code> codes;
    int tau = 1;
    int max_correction_bits = 0;

    std::size_t size() const { return codes.size(); }
    /// Smallest distance over all pairs of distinct (code, rotation) entries.
    int min_distance() const;
    /// Throws InvariantViolation when any invariant fails.
    void validate() const;
};

/// Greedy randomized search; deterministic for a given seed. Throws
/// GenerationStalled after 10^6 rejected proposals.
MarkerDictionary generate_dictionary(int count, int tau, std::uint64_t seed);
void save_dictionary(const MarkerDictionary& dict, const std::filesystem::path& path);
MarkerDictionary load_dictionary(const std::filesystem::path& path);

// ---- detector -------------------------------------------------------------------

struct DetectorParams {
    int adaptive_window = 23;
    double adaptive_C = 7.0;
    double min_perimeter_rate = 0.03;
    double max_perimeter_rate = 4.0;
    double polygon_eps_rate = 0.03;
    int cell_samples = 4;
    int border_bits = kBorderBits;
    bool otsu_fallback = true;          // uniform patches binarize at mid-gray
    double cell_margin_rate = 0.13;     // fraction of a cell skipped at each side when sampling
    int max_border_violations = 2;
    double min_corner_distance_rate = 0.05;
    int min_distance_to_border = 3;
    double duplicate_distance_px = 3.0;
};

struct UwMaskParams {
    int coarse_window = 45;  // in full-resolution pixels
    double coarse_C = 5.0;
    int coarse_downsample = 2;  // the coarse pass runs on a box-downsampled image
    double aggressive_C = 3.0;
    int dilate_radius = 8;
    double min_contour_fraction = 0.5;  // of the detector's minimum contour length
};

struct BinaryImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 1 = foreground (dark)

    BinaryImage() = default;
    BinaryImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}
    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const;
};

/// Foreground iff intensity < local window mean - C, window clipped to the image.
BinaryImage adaptive_threshold(const GrayU8& gray, int window, double C);
BinaryImage adaptive_threshold(const GrayU8& gray, const IntegralImage& ii, int window, double C);
/// As above, but only pixels where `mask` is set can become foreground.
BinaryImage adaptive_threshold(const GrayU8& gray, const IntegralImage& ii, int window, double C,
                               const BinaryImage& mask);

using Contour = std::vector<PointI>;

/// Outer borders of all 8-connected foreground components (Suzuki-Abe border
/// following), in raster order of their starting pixel.
std::vector<Contour> find_contours(const BinaryImage& bin);

/// Douglas-Peucker simplification of a closed contour.
std::vector<PointI> approx_polygon(const Contour& contour, double epsilon);

struct Quad {
    std::array<Point2, 4> corners;  // clockwise in image coordinates
    double perimeter() const;
};

/// Orders corners clockwise with corner 0 the one pointing most towards the
/// image's top-left from the centroid.
Quad canonical_order(const Quad& q);

std::vector<Quad> approx_quads(std::span<const Contour> contours, const DetectorParams& params, int width, int height);

using Homography = Eigen::Matrix3d;

Point2 apply(const Homography& h, Point2 p);
/// Four-point DLT; normalized so H(2,2) = 1. Throws DegenerateQuad.
Homography homography_from_points(std::span<const Point2, 4> src, std::span<const Point2, 4> dst);
/// Maps the canonical square [0,S]^2 (corners TL,TR,BR,BL) onto the quad.
Homography quad_homography(const Quad& quad, int grid_size = kMarkerCells);

struct BitMatrix {
    std::array<std::array<std::uint8_t, kMarkerCells>, kMarkerCells> cells{};  // 1 = white
    int border_violations = 0;

    Code payload() const;
};

/// Throws OutOfImage when more than 20% of the sample points fall outside the image.
BitMatrix sample_bits(const GrayU8& gray, const Homography& h, const DetectorParams& params);

struct Decoded {
    int id = 0;
    int rotation = 0;
    int hamming_errors = 0;
};

/// Nearest (code, rotation) by Hamming distance; rejects ties and distances
/// above max_correction_bits. `rotation` k means the observed payload equals
/// the code rotated k quarter turns clockwise.
std::optional<Decoded> decode_bits(Code payload, const MarkerDictionary& dict);

/// Sub-pixel corners from lines fitted to edge points along each side.
/// Corners whose refinement is ill-conditioned keep their input position.
Quad refine_corners(const GrayU8& gray, const Quad& quad);

struct DetectedMarker {
    int id = 0;
    std::array<Point2, 4> corners;  // marker TL, TR, BR, BL
    int rotation = 0;
    int hamming_errors = 0;
};

std::vector<DetectedMarker> detect(const GrayU8& gray, const MarkerDictionary& dict,
                                   const DetectorParams& params = {});

/// Runs the candidate stages (contours onwards) on an already thresholded image.
std::vector<DetectedMarker> detect_from_binary(const GrayU8& gray, const BinaryImage& bin,
                                               const MarkerDictionary& dict, const DetectorParams& params);

struct UwDetection {
    std::vector<DetectedMarker> markers;
    std::size_t contour_foreground = 0;  // foreground pixels entering find_contours
};

/// Masked variant: a conservative threshold locates marker-sized contours,
/// their dilated neighborhood masks an aggressive threshold, and the standard
/// candidate stages run on the masked image.
UwDetection detect_uw(const GrayU8& gray, const MarkerDictionary& dict, const DetectorParams& params = {},
                      const UwMaskParams& mask = {});

/// The mask detect_uw applies to its aggressive threshold (exposed for tests).
BinaryImage uw_contour_mask(const GrayU8& gray, const DetectorParams& params, const UwMaskParams& mask);

// ---- pose -----------------------------------------------------------------------

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
};

struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Planar pose from the homography between the marker square (side
/// `marker_length`, centered at the origin, x right, y down) and the image.
Pose estimate_pose(const DetectedMarker& m, const CameraIntrinsics& cam, double marker_length);
Point2 project(const Pose& pose, const CameraIntrinsics& cam, const Eigen::Vector3d& point);

// ---- serialization --------------------------------------------------------------

/// `frame_id marker_id x0 y0 x1 y1 x2 y2 x3 y3 rotation hamming_errors`
std::string format_detection(int frame_id, const DetectedMarker& m);
/// Inverse of format_detection; returns the frame id through `frame_id`.
DetectedMarker parse_detection(const std::string& line, int* frame_id = nullptr);

}  // namespace uwmark::markers
