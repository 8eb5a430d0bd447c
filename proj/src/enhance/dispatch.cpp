#include <cmath>
#include <map>
#include <sstream>

#include "uwmark/enhance.hpp"

namespace uwmark::enhance {

using nlohmann::json;

namespace {

constexpr const char* kNames[] = {"none", "gaussian", "median", "bilateral", "histeq", "clahe",
                                  "wb",   "mbuwwb",   "deblur", "bcp",       "fusion"};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
    }
}

void reject_unknown_keys(const json& params, std::initializer_list<const char*> allowed, const std::string& name) {
    for (auto it = params.begin(); it != params.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) throw Error(ErrorCode::ConfigError, "unknown parameter '" + it.key() + "' for filter " + name);
    }
}

BilateralParams bilateral_from(const json& j) {
    reject_unknown_keys(j, {"sigma_space", "sigma_color", "radius"}, "bilateral");
    BilateralParams p;
    p.sigma_space = get_or(j, "sigma_space", p.sigma_space);
    p.sigma_color = get_or(j, "sigma_color", p.sigma_color);
    p.radius = get_or(j, "radius", p.radius);
    if (!(p.sigma_space > 0) || !(p.sigma_color > 0)) throw Error(ErrorCode::ConfigError, "bilateral sigmas must be > 0");
    return p;
}

ClaheParams clahe_from(const json& j) {
    reject_unknown_keys(j, {"clip_limit", "tiles_x", "tiles_y"}, "clahe");
    ClaheParams p;
    p.clip_limit = get_or(j, "clip_limit", p.clip_limit);
    p.tiles_x = get_or(j, "tiles_x", p.tiles_x);
    p.tiles_y = get_or(j, "tiles_y", p.tiles_y);
    if (p.clip_limit < 1 || p.tiles_x < 1 || p.tiles_y < 1)
        throw Error(ErrorCode::ConfigError, "clahe needs clip_limit >= 1 and tiles >= 1");
    return p;
}

WhiteBalanceParams wb_from(const json& j, WhiteBalanceParams p, const std::string& name) {
    reject_unknown_keys(j, {"black_percentile", "white_percentile"}, name);
    p.black_percentile = get_or(j, "black_percentile", p.black_percentile);
    p.white_percentile = get_or(j, "white_percentile", p.white_percentile);
    if (!(p.black_percentile >= 0 && p.black_percentile < 50 && p.white_percentile > 50 && p.white_percentile <= 100))
        throw Error(ErrorCode::ConfigError, "percentiles must satisfy 0<=black<50<white<=100");
    return p;
}

json bilateral_json(const BilateralParams& p) {
    return {{"sigma_space", p.sigma_space}, {"sigma_color", p.sigma_color}, {"radius", p.radius}};
}

json clahe_json(const ClaheParams& p) {
    return {{"clip_limit", p.clip_limit}, {"tiles_x", p.tiles_x}, {"tiles_y", p.tiles_y}};
}

// Shortest decimal form: 2 -> "2", 2.5 -> "2.5".
std::string num(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

Plane apply_luma_filter(const Plane& y, const FilterSpec& spec) {
    return std::visit(
        [&](const auto& p) -> Plane {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianParams>) return gaussian_filter(y, p);
            else if constexpr (std::is_same_v<T, MedianParams>) return median_filter(y, p);
            else if constexpr (std::is_same_v<T, BilateralParams>) return bilateral_filter(y, p);
            else if constexpr (std::is_same_v<T, HistEqParams>) return histogram_equalize(y);
            else if constexpr (std::is_same_v<T, ClaheParams>) return clahe(y, p);
            else if constexpr (std::is_same_v<T, DeblurParams>) return deblur(y, p);
            else throw Error(ErrorCode::UnknownFilter, spec.name() + " is not a luma-only filter");
        },
        spec.params);
}

Image apply_color_filter(const Image& img, const FilterSpec& spec, std::span<const Roi> rois) {
    return std::visit(
        [&](const auto& p) -> Image {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, NoneParams>) return img;
            else if constexpr (std::is_same_v<T, WhiteBalanceParams>) return white_balance(img, p);
            else if constexpr (std::is_same_v<T, MbuwwbParams>) return mbuwwb(img, rois, p.wb);
            else if constexpr (std::is_same_v<T, BcpParams>) return bcp_restore(img, p).image;
            else if constexpr (std::is_same_v<T, FusionParams>) return fusion_enhance(img, p);
            else throw Error(ErrorCode::UnknownFilter, spec.name() + " is not a color filter");
        },
        spec.params);
}

}  // namespace

std::string FilterSpec::name() const { return kNames[params.index()]; }

bool FilterSpec::acts_on_luma() const {
    return std::holds_alternative<GaussianParams>(params) || std::holds_alternative<MedianParams>(params) ||
           std::holds_alternative<BilateralParams>(params) || std::holds_alternative<HistEqParams>(params) ||
           std::holds_alternative<ClaheParams>(params) || std::holds_alternative<DeblurParams>(params);
}

FilterSpec make_filter_spec(const std::string& name, const json& params, std::string label) {
    if (!params.is_object()) throw Error(ErrorCode::ConfigError, "filter params must be an object");
    FilterSpec spec;
    if (name == "none") {
        reject_unknown_keys(params, {}, name);
        spec.params = NoneParams{};
    } else if (name == "gaussian") {
        reject_unknown_keys(params, {"sigma_space", "radius"}, name);
        GaussianParams p;
        p.sigma_space = get_or(params, "sigma_space", p.sigma_space);
        p.radius = get_or(params, "radius", p.radius);
        if (!(p.sigma_space > 0)) throw Error(ErrorCode::ConfigError, "gaussian sigma_space must be > 0");
        spec.params = p;
    } else if (name == "median") {
        reject_unknown_keys(params, {"window"}, name);
        MedianParams p;
        p.window = get_or(params, "window", p.window);
        if (p.window < 3 || p.window % 2 == 0) throw Error(ErrorCode::ConfigError, "median window must be odd >= 3");
        spec.params = p;
    } else if (name == "bilateral") {
        spec.params = bilateral_from(params);
    } else if (name == "histeq") {
        reject_unknown_keys(params, {}, name);
        spec.params = HistEqParams{};
    } else if (name == "clahe") {
        spec.params = clahe_from(params);
    } else if (name == "wb") {
        spec.params = wb_from(params, WhiteBalanceParams{}, name);
    } else if (name == "mbuwwb") {
        spec.params = MbuwwbParams{wb_from(params, MbuwwbParams{}.wb, name)};
    } else if (name == "deblur") {
        reject_unknown_keys(params, {"sigma_space", "weight"}, name);
        DeblurParams p;
        p.sigma_space = get_or(params, "sigma_space", p.sigma_space);
        p.weight = get_or(params, "weight", p.weight);
        if (!(p.sigma_space > 0) || p.weight < 0) throw Error(ErrorCode::ConfigError, "bad deblur parameters");
        spec.params = p;
    } else if (name == "bcp") {
        reject_unknown_keys(params,
                            {"patch_radius", "dark_fraction", "variance_radius", "guided_radius", "guided_eps", "t_floor"},
                            name);
        BcpParams p;
        p.patch_radius = get_or(params, "patch_radius", p.patch_radius);
        p.dark_fraction = get_or(params, "dark_fraction", p.dark_fraction);
        p.variance_radius = get_or(params, "variance_radius", p.variance_radius);
        p.guided_radius = get_or(params, "guided_radius", p.guided_radius);
        p.guided_eps = get_or(params, "guided_eps", p.guided_eps);
        p.t_floor = get_or(params, "t_floor", p.t_floor);
        if (p.patch_radius < 1 || p.variance_radius < 1 || p.guided_radius < 1 || !(p.dark_fraction > 0) ||
            p.dark_fraction > 0.05 || !(p.guided_eps > 0) || !(p.t_floor > 0 && p.t_floor < 1))
            throw Error(ErrorCode::ConfigError, "bad bcp parameters");
        spec.params = p;
    } else if (name == "fusion") {
        reject_unknown_keys(params, {"pyramid_levels", "bilateral", "clahe"}, name);
        FusionParams p;
        p.pyramid_levels = get_or(params, "pyramid_levels", p.pyramid_levels);
        if (params.contains("bilateral")) p.bilateral = bilateral_from(params.at("bilateral"));
        if (params.contains("clahe")) p.clahe = clahe_from(params.at("clahe"));
        if (p.pyramid_levels < 1) throw Error(ErrorCode::ConfigError, "pyramid_levels must be >= 1");
        spec.params = p;
    } else {
        throw Error(ErrorCode::UnknownFilter, "unknown filter '" + name + "'");
    }
    spec.label = label.empty() ? default_label(spec) : std::move(label);
    return spec;
}

FilterSpec parse_filter_spec(const json& j) {
    if (j.is_string()) return make_filter_spec(j.get<std::string>());
    if (!j.is_object() || !j.contains("filter") || !j.at("filter").is_string())
        throw Error(ErrorCode::ConfigError, "filter spec must be a name or {\"filter\": name, \"params\": {...}}");
    const json params = j.value("params", json::object());
    return make_filter_spec(j.at("filter").get<std::string>(), params, j.value("label", std::string{}));
}

json to_json(const FilterSpec& spec) {
    json params = std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, GaussianParams>)
                return {{"sigma_space", p.sigma_space}, {"radius", p.radius}};
            else if constexpr (std::is_same_v<T, MedianParams>) return {{"window", p.window}};
            else if constexpr (std::is_same_v<T, BilateralParams>) return bilateral_json(p);
            else if constexpr (std::is_same_v<T, ClaheParams>) return clahe_json(p);
            else if constexpr (std::is_same_v<T, WhiteBalanceParams>)
                return {{"black_percentile", p.black_percentile}, {"white_percentile", p.white_percentile}};
            else if constexpr (std::is_same_v<T, MbuwwbParams>)
                return {{"black_percentile", p.wb.black_percentile}, {"white_percentile", p.wb.white_percentile}};
            else if constexpr (std::is_same_v<T, DeblurParams>)
                return {{"sigma_space", p.sigma_space}, {"weight", p.weight}};
            else if constexpr (std::is_same_v<T, BcpParams>)
                return {{"patch_radius", p.patch_radius},   {"dark_fraction", p.dark_fraction},
                        {"variance_radius", p.variance_radius}, {"guided_radius", p.guided_radius},
                        {"guided_eps", p.guided_eps},       {"t_floor", p.t_floor}};
            else if constexpr (std::is_same_v<T, FusionParams>)
                return {{"pyramid_levels", p.pyramid_levels},
                        {"bilateral", bilateral_json(p.bilateral)},
                        {"clahe", clahe_json(p.clahe)}};
            else return json::object();
        },
        spec.params);
    return {{"filter", spec.name()}, {"label", spec.label}, {"params", params}};
}

std::string default_label(const FilterSpec& spec) {
    return std::visit(
        [&](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ClaheParams>) return "clahe_clip" + num(p.clip_limit);
            else if constexpr (std::is_same_v<T, DeblurParams>) return "deblur_w" + num(p.weight);
            else if constexpr (std::is_same_v<T, WhiteBalanceParams>)
                return "wb_" + num(p.black_percentile) + "_" + num(p.white_percentile);
            else if constexpr (std::is_same_v<T, MbuwwbParams>)
                return "mbuwwb_" + num(p.wb.black_percentile) + "_" + num(p.wb.white_percentile);
            else if constexpr (std::is_same_v<T, GaussianParams>) return "gaussian_s" + num(p.sigma_space);
            else if constexpr (std::is_same_v<T, MedianParams>) return "median_" + num(p.window);
            else if constexpr (std::is_same_v<T, BilateralParams>)
                return "bilateral_c" + num(p.sigma_color) + "_s" + num(p.sigma_space);
            else return spec.name();
        },
        spec.params);
}

namespace {

const std::vector<std::pair<std::string, json>>& table3_rows() {
    static const std::vector<std::pair<std::string, json>> rows{
        {"Original video", {{"filter", "none"}}},
        {"CLAHE, clip limit 2", {{"filter", "clahe"}, {"params", {{"clip_limit", 2}}}}},
        {"CLAHE, clip limit 4", {{"filter", "clahe"}, {"params", {{"clip_limit", 4}}}}},
        {"CLAHE, clip limit 6", {{"filter", "clahe"}, {"params", {{"clip_limit", 6}}}}},
        {"Debluring, weight 1", {{"filter", "deblur"}, {"params", {{"weight", 1}}}}},
        {"Debluring, weight 4", {{"filter", "deblur"}, {"params", {{"weight", 4}}}}},
        {"White bal., perc. 0/100",
         {{"filter", "wb"}, {"params", {{"black_percentile", 0}, {"white_percentile", 100}}}}},
        {"White bal., perc. 3/97",
         {{"filter", "wb"}, {"params", {{"black_percentile", 3}, {"white_percentile", 97}}}}},
        {"MBUWWB, perc. 0/100",
         {{"filter", "mbuwwb"}, {"params", {{"black_percentile", 0}, {"white_percentile", 100}}}}},
        {"MBUWWB, perc. 3/97",
         {{"filter", "mbuwwb"}, {"params", {{"black_percentile", 3}, {"white_percentile", 97}}}}},
    };
    return rows;
}

}  // namespace

std::vector<FilterSpec> table3_filter_specs() {
    std::vector<FilterSpec> specs;
    for (const auto& [label, j] : table3_rows()) specs.push_back(parse_filter_spec(j));
    return specs;
}

std::vector<std::string> table3_row_labels() {
    std::vector<std::string> labels;
    for (const auto& row : table3_rows()) labels.push_back(row.first);
    return labels;
}

FilterSpec filter_spec_for_row(const std::string& row_label) {
    for (const auto& [label, j] : table3_rows())
        if (label == row_label) return parse_filter_spec(j);
    throw Error(ErrorCode::UnknownFilter, "no filter for row '" + row_label + "'");
}

Image apply_filter_yuv(const Image& yuv, const FilterSpec& spec) {
    if (!spec.acts_on_luma()) throw Error(ErrorCode::UnknownFilter, spec.name() + " does not act on the Y plane");
    Image out = yuv;
    out.set_channel(0, apply_luma_filter(yuv.channel(0), spec));
    return out;
}

Image enhance_dispatch(const Image& img, const FilterSpec& spec, std::span<const Roi> rois) {
    if (!spec.acts_on_luma()) return apply_color_filter(img, spec, rois);
    if (img.channels() == 1) {
        Image out(img.width(), img.height(), 1);
        out.set_channel(0, apply_luma_filter(img.channel(0), spec));
        return out;
    }
    return yuv_to_rgb(apply_filter_yuv(rgb_to_yuv(img), spec));
}

GrayU8 enhance_luma(const Image& img, const FilterSpec& spec, std::span<const Roi> rois) {
    if (!spec.acts_on_luma()) return luma_u8(apply_color_filter(img, spec, rois));
    const Plane y = apply_luma_filter(luma_plane(img), spec);
    GrayU8 out(y.width, y.height);
    for (std::size_t i = 0; i < y.size(); ++i) out.data[i] = quantize(y.data[i]);
    return out;
}

}  // namespace uwmark::enhance
