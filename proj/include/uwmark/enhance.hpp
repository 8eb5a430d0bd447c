#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "uwmark/image.hpp"

namespace uwmark::enhance {

// ---- parameters ---------------------------------------------------------------

struct GaussianParams {
    double sigma_space = 0.4;
    int radius = 0;  // 0 selects ceil(3*sigma), at least 1

    int resolved_radius() const;
};

struct MedianParams {
    int window = 3;  // odd, >= 3
};

/// sigma_color is measured on the byte scale [0,255].
struct BilateralParams {
    double sigma_space = 4.0;
    double sigma_color = 2.0;
    int radius = 0;  // 0 selects ceil(3*sigma_space)

    int resolved_radius() const;
};

struct HistEqParams {};

struct ClaheParams {
    double clip_limit = 2.0;  // multiple of the uniform bin height tile_area/256
    int tiles_x = 8;
    int tiles_y = 8;
};

struct WhiteBalanceParams {
    double black_percentile = 2.0;
    double white_percentile = 98.0;
};

struct MbuwwbParams {
    WhiteBalanceParams wb{3.0, 97.0};
};

struct DeblurParams {
    double sigma_space = 2.8;
    double weight = 1.9;
};

struct BcpParams {
    int patch_radius = 7;
    double dark_fraction = 0.01;
    int variance_radius = 3;
    int guided_radius = 20;
    double guided_eps = 1e-3;
    double t_floor = 0.1;
};

struct FusionParams {
    int pyramid_levels = 5;
    BilateralParams bilateral{};
    ClaheParams clahe{};
};

struct NoneParams {};

struct Roi {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;
};

using RgbTriple = std::array<double, 3>;

struct BcpDiagnostics {
    RgbTriple atmospheric_light{};
    Plane transmittance;
};

struct BcpResult {
    Image image;
    BcpDiagnostics diagnostics;
};

// ---- denoising ----------------------------------------------------------------

/// Normalized Gaussian convolution over the (2r+1)^2 window, renormalized at borders.
Plane gaussian_filter(const Plane& in, const GaussianParams& p);
Image gaussian_filter(const Image& in, const GaussianParams& p);

/// Median of the in-bounds window; even counts take the lower median.
Plane median_filter(const Plane& in, const MedianParams& p);
Image median_filter(const Image& in, const MedianParams& p);

/// Direct-evaluation bilateral filter; intensity differences on the byte scale.
Plane bilateral_filter(const Plane& in, const BilateralParams& p);
Image bilateral_filter(const Image& in, const BilateralParams& p);

// ---- contrast -------------------------------------------------------------------

/// 256-bin mapping v -> round(255*(cdf(v)-cdf_min)/(1-cdf_min)); a constant
/// plane is returned unchanged.
std::array<std::uint8_t, 256> histogram_equalize_mapping(const GrayU8& g, bool* degenerate = nullptr);
Plane histogram_equalize(const Plane& in);

struct ClaheTile {
    int x0, y0, x1, y1;
    std::array<int, 256> clipped_hist;
    std::array<std::uint8_t, 256> mapping;
};

/// Per-tile clipped histograms and equalization mappings.
std::vector<ClaheTile> clahe_tiles(const GrayU8& g, const ClaheParams& p);
/// Clips `hist` so no bin exceeds `limit`, redistributing the excess in one
/// uniform pass; the remainder (< 256 counts) is dropped.
std::array<int, 256> clip_histogram(const std::array<int, 256>& hist, double limit);
GrayU8 clahe(const GrayU8& g, const ClaheParams& p);
Plane clahe(const Plane& in, const ClaheParams& p);

struct ChannelRange {
    int lo = 0;  // byte value sent to 0
    int hi = 255;  // byte value sent to 1
};

/// Black/white percentile anchors of a 256-bin histogram.
ChannelRange percentile_range(const std::array<std::size_t, 256>& hist, std::size_t total,
                              const WhiteBalanceParams& p);

Image white_balance(const Image& rgb, const WhiteBalanceParams& p);

/// White balance whose anchors come only from pixels inside the union of
/// `rois`; the mapping is applied to the whole image. No usable ROI falls
/// back to white_balance.
Image mbuwwb(const Image& rgb, std::span<const Roi> rois, const WhiteBalanceParams& p);

/// I_out = (1+w) I_in - w Gaussian(I_in), clamped to [0,1].
Plane deblur(const Plane& in, const DeblurParams& p);
Image deblur(const Image& in, const DeblurParams& p);

// ---- bright channel prior ------------------------------------------------------

Plane bright_channel(const Image& rgb, int patch_radius);
RgbTriple estimate_atmospheric_light(const Image& rgb, const Plane& jbcp, const BcpParams& p);
Plane transmittance(const Plane& jbcp, const RgbTriple& atmospheric_light, double t_floor = 0.1);
Plane guided_filter(const Plane& guide, const Plane& src, int radius, double eps);
BcpResult bcp_restore(const Image& rgb, const BcpParams& p);

// ---- fusion -------------------------------------------------------------------

Image gray_world(const Image& rgb);

/// Per-pixel normalized weights (local contrast + saliency) for the given inputs.
std::vector<Plane> fusion_weights(std::span<const Image> inputs);

/// Multi-scale blend: Laplacian pyramids of the inputs weighted by Gaussian
/// pyramids of the weights, collapsed and clamped.
Image fusion_blend(std::span<const Image> inputs, std::span<const Plane> weights, int levels);

Image fusion_enhance(const Image& rgb, const FusionParams& p);

// ---- dispatch -------------------------------------------------------------------

using FilterParams = std::variant<NoneParams, GaussianParams, MedianParams, BilateralParams, HistEqParams,
                                  ClaheParams, WhiteBalanceParams, MbuwwbParams, DeblurParams, BcpParams,
                                  FusionParams>;

struct FilterSpec {
    std::string label;
    FilterParams params;

    std::string name() const;
    bool acts_on_luma() const;  // true when the filter only touches the Y plane
};

/// Names accepted in configs: none, gaussian, median, bilateral, histeq, clahe,
/// wb, mbuwwb, deblur, bcp, fusion.
FilterSpec make_filter_spec(const std::string& name, const nlohmann::json& params = nlohmann::json::object(),
                            std::string label = {});
/// Parses `{"filter": name, "params": {...}, "label": optional}` or a bare name string.
FilterSpec parse_filter_spec(const nlohmann::json& j);
nlohmann::json to_json(const FilterSpec& spec);
std::string default_label(const FilterSpec& spec);

/// The ten filter rows of the multi-environment comparison, in table order.
std::vector<FilterSpec> table3_filter_specs();
/// Maps a published row label ("CLAHE, clip limit 2", "MBUWWB, perc. 3/97", ...)
/// to its spec; throws UnknownFilter for anything else.
FilterSpec filter_spec_for_row(const std::string& row_label);
std::vector<std::string> table3_row_labels();

/// Applies a luma-only filter to the Y plane of a YUV image; U,V are copied.
Image apply_filter_yuv(const Image& yuv, const FilterSpec& spec);

/// Applies the filter in its color space and returns RGB (or the 1-channel result).
Image enhance_dispatch(const Image& img, const FilterSpec& spec, std::span<const Roi> rois = {});

/// Same as enhance_dispatch followed by luma_u8, without a round trip through RGB
/// for luma-only filters.
GrayU8 enhance_luma(const Image& img, const FilterSpec& spec, std::span<const Roi> rois = {});

}  // namespace uwmark::enhance
