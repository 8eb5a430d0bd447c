#include <fstream>
#include <set>

#include "uwmark/error.hpp"
#include "uwmark/harness.hpp"

namespace uwmark::harness {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw Error(ErrorCode::ConfigError, "unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& dst) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("bad value for '") + key + "': " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

}  // namespace

markers::DetectorParams detector_params_from_json(const json& j, markers::DetectorParams p) {
    check_keys(j,
               {"adaptive_window", "adaptive_C", "min_perimeter_rate", "max_perimeter_rate", "polygon_eps_rate",
                "cell_samples", "border_bits", "otsu_fallback", "cell_margin_rate", "max_border_violations",
                "min_corner_distance_rate", "min_distance_to_border", "duplicate_distance_px"},
               "detector params");
    read(j, "adaptive_window", p.adaptive_window);
    read(j, "adaptive_C", p.adaptive_C);
    read(j, "min_perimeter_rate", p.min_perimeter_rate);
    read(j, "max_perimeter_rate", p.max_perimeter_rate);
    read(j, "polygon_eps_rate", p.polygon_eps_rate);
    read(j, "cell_samples", p.cell_samples);
    read(j, "border_bits", p.border_bits);
    read(j, "otsu_fallback", p.otsu_fallback);
    read(j, "cell_margin_rate", p.cell_margin_rate);
    read(j, "max_border_violations", p.max_border_violations);
    read(j, "min_corner_distance_rate", p.min_corner_distance_rate);
    read(j, "min_distance_to_border", p.min_distance_to_border);
    read(j, "duplicate_distance_px", p.duplicate_distance_px);
    if (p.adaptive_window < 3 || p.adaptive_window % 2 == 0)
        throw Error(ErrorCode::ConfigError, "adaptive_window must be odd and >= 3");
    if (!(p.min_perimeter_rate > 0 && p.min_perimeter_rate < p.max_perimeter_rate))
        throw Error(ErrorCode::ConfigError, "need 0 < min_perimeter_rate < max_perimeter_rate");
    if (p.border_bits != markers::kBorderBits) throw Error(ErrorCode::ConfigError, "border_bits must be 1");
    if (p.cell_samples < 1) throw Error(ErrorCode::ConfigError, "cell_samples must be >= 1");
    return p;
}

markers::UwMaskParams mask_params_from_json(const json& j, markers::UwMaskParams m) {
    check_keys(j, {"coarse_window", "coarse_C", "aggressive_C", "dilate_radius", "min_contour_fraction",
                   "coarse_downsample"},
               "mask params");
    read(j, "coarse_window", m.coarse_window);
    read(j, "coarse_C", m.coarse_C);
    read(j, "aggressive_C", m.aggressive_C);
    read(j, "dilate_radius", m.dilate_radius);
    read(j, "min_contour_fraction", m.min_contour_fraction);
    read(j, "coarse_downsample", m.coarse_downsample);
    if (m.coarse_window < 3 || m.coarse_window % 2 == 0)
        throw Error(ErrorCode::ConfigError, "coarse_window must be odd and >= 3");
    if (m.coarse_downsample < 1) throw Error(ErrorCode::ConfigError, "coarse_downsample must be >= 1");
    if (m.dilate_radius < 0) throw Error(ErrorCode::ConfigError, "dilate_radius must be >= 0");
    return m;
}

DetectorSpec parse_detector_spec(const json& j) {
    DetectorSpec d;
    std::string type;
    if (j.is_string()) {
        type = j.get<std::string>();
    } else {
        check_keys(j, {"type", "label", "params", "mask"}, "detector");
        if (!j.contains("type")) throw Error(ErrorCode::ConfigError, "detector needs a type");
        read(j, "type", type);
        read(j, "label", d.label);
        if (j.contains("params")) d.params = detector_params_from_json(j.at("params"));
        if (j.contains("mask")) d.mask = mask_params_from_json(j.at("mask"));
    }
    if (type == "detect") d.underwater = false;
    else if (type == "detect_uw") d.underwater = true;
    else throw Error(ErrorCode::ConfigError, "unknown detector type '" + type + "'");
    if (!d.underwater && !j.is_string() && j.contains("mask"))
        throw Error(ErrorCode::ConfigError, "mask params only apply to detect_uw");
    if (d.label.empty()) d.label = type;
    if (d.label.find_first_of(",\n") != std::string::npos)
        throw Error(ErrorCode::ConfigError, "detector label may not contain commas");
    return d;
}

RunConfig RunConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j, {"dataset", "dictionary", "filters", "detectors", "match_threshold_px", "mbuwwb_feedback", "max_frames"},
               "run config");
    RunConfig c;
    if (!j.contains("dataset")) throw Error(ErrorCode::ConfigError, "run config needs a dataset");
    std::string s;
    read(j, "dataset", s);
    c.dataset = resolve(s, base_dir);
    if (j.contains("dictionary")) {
        read(j, "dictionary", s);
        c.dictionary = resolve(s, base_dir);
    }
    read(j, "match_threshold_px", c.match_threshold_px);
    read(j, "mbuwwb_feedback", c.mbuwwb_feedback);
    read(j, "max_frames", c.max_frames);
    if (!(c.match_threshold_px > 0)) throw Error(ErrorCode::ConfigError, "match_threshold_px must be > 0");

    const json filters = j.value("filters", json::array({"none"}));
    if (filters.is_string() && filters.get<std::string>() == "table3") {
        c.filters = enhance::table3_filter_specs();
    } else if (filters.is_array()) {
        for (const auto& f : filters) c.filters.push_back(enhance::parse_filter_spec(f));
    } else {
        throw Error(ErrorCode::ConfigError, "filters must be a list or \"table3\"");
    }
    const json detectors = j.value("detectors", json::array({"detect"}));
    if (!detectors.is_array()) throw Error(ErrorCode::ConfigError, "detectors must be a list");
    for (const auto& d : detectors) c.detectors.push_back(parse_detector_spec(d));
    if (c.filters.empty() || c.detectors.empty())
        throw Error(ErrorCode::ConfigError, "need at least one filter and one detector");

    std::set<std::string> labels;
    for (const auto& f : c.filters) {
        if (f.label.find_first_of(",\n") != std::string::npos)
            throw Error(ErrorCode::ConfigError, "filter label may not contain commas: " + f.label);
        if (!labels.insert(f.label).second) throw Error(ErrorCode::ConfigError, "duplicate filter label " + f.label);
    }
    labels.clear();
    for (const auto& d : c.detectors)
        if (!labels.insert(d.label).second) throw Error(ErrorCode::ConfigError, "duplicate detector label " + d.label);
    return c;
}

}  // namespace uwmark::harness
