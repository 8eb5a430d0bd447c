#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "uwmark/error.hpp"
#include "uwmark/rng.hpp"
#include "uwmark/simulate.hpp"

namespace uwmark::sim {
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

DegradationModel model_from_json(const json& j, std::string& name) {
    if (j.is_string()) {
        name = j.get<std::string>();
        return preset(name);
    }
    check_keys(j, {"preset", "atmospheric_light", "beta", "blur_sigma", "noise_sigma", "impulse_prob"}, "model");
    name = "custom";
    DegradationModel m;
    if (j.contains("preset")) {
        name = j.at("preset").get<std::string>();
        m = preset(name);
    }
    read(j, "atmospheric_light", m.atmospheric_light);
    read(j, "beta", m.beta);
    read(j, "blur_sigma", m.blur_sigma);
    read(j, "noise_sigma", m.noise_sigma);
    read(j, "impulse_prob", m.impulse_prob);
    return m;
}

json model_to_json(const DegradationModel& m) {
    return {{"atmospheric_light", m.atmospheric_light},
            {"beta", m.beta},
            {"blur_sigma", m.blur_sigma},
            {"noise_sigma", m.noise_sigma},
            {"impulse_prob", m.impulse_prob}};
}

json board_to_json(const BoardSpec& b) {
    return {{"rows", b.rows},
            {"cols", b.cols},
            {"ids", b.resolved_ids()},
            {"marker_length", b.marker_length},
            {"gap", b.gap},
            {"margin", b.resolved_margin()},
            {"pixels_per_cell", b.pixels_per_cell}};
}

json point_json(Point2 p) { return json::array({p.x, p.y}); }

}  // namespace

DatasetConfig DatasetConfig::from_json(const json& j) {
    check_keys(j, {"frames", "width", "height", "focal_px", "board", "model", "background", "trajectory", "beta_scale",
                   "supersample", "dictionary", "dictionary_file"},
               "dataset config");
    DatasetConfig c;
    read(j, "frames", c.frames);
    read(j, "width", c.camera.width);
    read(j, "height", c.camera.height);
    read(j, "focal_px", c.camera.focal_px);
    if (j.contains("board")) {
        const auto& b = j.at("board");
        check_keys(b, {"rows", "cols", "ids", "marker_length", "gap", "margin", "pixels_per_cell"}, "board");
        read(b, "rows", c.board.rows);
        read(b, "cols", c.board.cols);
        read(b, "ids", c.board.ids);
        read(b, "marker_length", c.board.marker_length);
        read(b, "gap", c.board.gap);
        read(b, "margin", c.board.margin);
        read(b, "pixels_per_cell", c.board.pixels_per_cell);
    }
    if (j.contains("model")) c.model = model_from_json(j.at("model"), c.model_name);
    read(j, "background", c.background);
    if (j.contains("trajectory")) {
        const auto& t = j.at("trajectory");
        check_keys(t, {"distance_start", "distance_end", "max_tilt_deg", "max_roll_deg", "max_offset_m"}, "trajectory");
        read(t, "distance_start", c.distance_start);
        read(t, "distance_end", c.distance_end);
        read(t, "max_tilt_deg", c.max_tilt_deg);
        read(t, "max_roll_deg", c.max_roll_deg);
        read(t, "max_offset_m", c.max_offset_m);
    }
    if (j.contains("beta_scale")) {
        std::array<double, 2> s{};
        read(j, "beta_scale", s);
        c.beta_scale_start = s[0];
        c.beta_scale_end = s[1];
    }
    read(j, "supersample", c.supersample);
    if (j.contains("dictionary")) {
        const auto& d = j.at("dictionary");
        check_keys(d, {"count", "tau", "seed"}, "dictionary");
        read(d, "count", c.dict_count);
        read(d, "tau", c.dict_tau);
        read(d, "seed", c.dict_seed);
    }
    if (j.contains("dictionary_file")) c.dictionary_file = j.at("dictionary_file").get<std::string>();

    if (c.frames < 0) throw Error(ErrorCode::ConfigError, "frames must be >= 0");
    if (c.camera.width < 16 || c.camera.height < 16 || !(c.camera.focal_px > 0))
        throw Error(ErrorCode::ConfigError, "invalid camera");
    if (!(c.distance_start > 0) || !(c.distance_end > 0)) throw Error(ErrorCode::ConfigError, "distances must be > 0");
    if (c.supersample < 1) throw Error(ErrorCode::ConfigError, "supersample must be >= 1");
    try {
        c.model.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    return c;
}

json DatasetConfig::to_json() const {
    json j{{"frames", frames},
           {"width", camera.width},
           {"height", camera.height},
           {"focal_px", camera.focal_px},
           {"board", board_to_json(board)},
           {"model", model_to_json(model)},
           {"trajectory",
            {{"distance_start", distance_start},
             {"distance_end", distance_end},
             {"max_tilt_deg", max_tilt_deg},
             {"max_roll_deg", max_roll_deg},
             {"max_offset_m", max_offset_m}}},
           {"beta_scale", {beta_scale_start, beta_scale_end}},
           {"supersample", supersample},
           {"dictionary", {{"count", dict_count}, {"tau", dict_tau}, {"seed", dict_seed}}}};
    if (background[0] >= 0) j["background"] = background;
    if (!dictionary_file.empty()) j["dictionary_file"] = dictionary_file.string();
    return j;
}

json GroundTruth::to_json() const {
    json frames_j = json::array();
    for (const auto& f : frames) {
        json ms = json::array();
        for (const auto& m : f.markers) {
            json corners = json::array();
            for (const auto& p : m.corners) corners.push_back(point_json(p));
            ms.push_back({{"id", m.id}, {"corners", corners}, {"fully_visible", m.fully_visible}});
        }
        frames_j.push_back({{"file", f.file}, {"distance_m", f.distance_m}, {"markers", ms}});
    }
    return {{"frames", frames_j}, {"model", model}, {"board", board}, {"seed", seed},
            {"width", width},     {"height", height}, {"dictionary", dictionary}};
}

GroundTruth GroundTruth::from_json(const json& j) {
    GroundTruth gt;
    try {
        for (const auto& f : j.at("frames")) {
            GroundTruthFrame fr;
            fr.file = f.at("file").get<std::string>();
            fr.distance_m = f.at("distance_m").get<double>();
            for (const auto& m : f.at("markers")) {
                GtMarker g;
                g.id = m.at("id").get<int>();
                const auto& cs = m.at("corners");
                if (cs.size() != 4) throw Error(ErrorCode::DatasetError, "marker needs four corners");
                for (int i = 0; i < 4; ++i) g.corners[i] = {cs[i].at(0).get<double>(), cs[i].at(1).get<double>()};
                g.fully_visible = m.at("fully_visible").get<bool>();
                fr.markers.push_back(g);
            }
            gt.frames.push_back(std::move(fr));
        }
        gt.model = j.value("model", json::object());
        gt.board = j.value("board", json::object());
        gt.seed = j.value("seed", std::uint64_t{0});
        gt.width = j.value("width", 0);
        gt.height = j.value("height", 0);
        gt.dictionary = j.value("dictionary", std::string{});
    } catch (const json::exception& e) {
        throw Error(ErrorCode::DatasetError, std::string("malformed ground truth: ") + e.what());
    }
    return gt;
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::DatasetError, "cannot open ground truth " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::DatasetError, "ground truth is not valid JSON: " + std::string(e.what()));
    }
    return GroundTruth::from_json(j);
}

GroundTruth generate_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir, std::uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

    const markers::MarkerDictionary dict = config.dictionary_file.empty()
                                               ? markers::generate_dictionary(config.dict_count, config.dict_tau,
                                                                              config.dict_seed)
                                               : markers::load_dictionary(config.dictionary_file);
    markers::save_dictionary(dict, out_dir / "dictionary.txt");

    GroundTruth gt;
    gt.seed = seed;
    gt.width = config.camera.width;
    gt.height = config.camera.height;
    gt.dictionary = "dictionary.txt";
    gt.board = board_to_json(config.board);
    gt.model = model_to_json(config.model);
    gt.model["name"] = config.model_name;
    gt.model["beta_scale"] = {config.beta_scale_start, config.beta_scale_end};
    gt.model["focal_px"] = config.camera.focal_px;

    const Rgb background = config.background[0] >= 0 ? config.background : config.model.atmospheric_light;
    std::map<int, BoardRender> boards;  // keyed by pixels per cell
    for (int i = 0; i < config.frames; ++i) {
        Rng rng(seed ^ static_cast<std::uint64_t>(i));
        const double frac = config.frames > 1 ? static_cast<double>(i) / (config.frames - 1) : 0.0;
        const double distance = config.distance_start + (config.distance_end - config.distance_start) * frac;
        const double tilt = config.max_tilt_deg * std::sqrt(rng.uniform());
        const double azimuth = 2 * 3.14159265358979323846 * rng.uniform();
        const double yaw = tilt * std::cos(azimuth), pitch = tilt * std::sin(azimuth);
        const double roll = config.max_roll_deg * (2 * rng.uniform() - 1);
        const double ox = config.max_offset_m * (2 * rng.uniform() - 1);
        const double oy = config.max_offset_m * (2 * rng.uniform() - 1);
        const ScenePose pose = board_pose(config.board, config.camera, distance, yaw, pitch, roll, ox, oy);

        // Board texture resolution close to the largest on-screen cell size.
        const double cell_px = config.camera.focal_px * config.board.marker_length / markers::kMarkerCells /
                               std::max(0.05, distance - config.board.width_m());
        const int ppc = std::clamp(static_cast<int>(std::ceil(cell_px)), 4, 48);
        auto it = boards.find(ppc);
        if (it == boards.end()) {
            BoardSpec spec = config.board;
            spec.pixels_per_cell = ppc;
            it = boards.emplace(ppc, render_board(dict, spec)).first;
        }
        Composite scene = composite_scene(it->second, pose, config.camera.width, config.camera.height, background,
                                          config.supersample);
        DegradationModel model = config.model;
        const double scale = config.beta_scale_start + (config.beta_scale_end - config.beta_scale_start) * frac;
        for (auto& b : model.beta) b *= scale;
        const Image frame = apply_underwater(scene.image, model, distance, rng.next());

        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.ppm", i);
        save_image(frame, out_dir / name);
        scene.truth.file = name;
        gt.frames.push_back(std::move(scene.truth));
    }

    std::ofstream out(out_dir / "ground_truth.json");
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write ground truth in " + out_dir.string());
    out << gt.to_json().dump(1) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for ground truth");
    return gt;
}

}  // namespace uwmark::sim
