#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwmark/image.hpp"
#include "uwmark/markers.hpp"

namespace uwmark::sim {

using markers::Point2;
using Rgb = std::array<double, 3>;

struct BoardSpec {
    int rows = 3;
    int cols = 3;
    std::vector<int> ids;        // row-major; empty means 0..rows*cols-1
    double marker_length = 0.19; // meters
    double gap = 0.05;           // meters
    double margin = -1.0;        // white border around the grid, meters; < 0 uses gap
    int pixels_per_cell = 16;

    double resolved_margin() const { return margin < 0 ? gap : margin; }
    /// Extent of the marker grid (without margin).
    double width_m() const { return cols * marker_length + (cols - 1) * gap; }
    double height_m() const { return rows * marker_length + (rows - 1) * gap; }
    std::vector<int> resolved_ids() const;
};

struct MetricMarker {
    int id = 0;
    std::array<Point2, 4> corners;  // TL, TR, BR, BL; origin at the grid's top-left, y down
};

struct BoardRender {
    Image image;
    std::vector<MetricMarker> markers;
    double margin_m = 0.0;
    double pixels_per_meter = 0.0;

    /// Board-image pixel coordinate (centres at integers) of a metric point.
    Point2 to_pixel(Point2 m) const {
        return {(m.x + margin_m) * pixels_per_meter - 0.5, (m.y + margin_m) * pixels_per_meter - 0.5};
    }
};

/// White board, black-bordered 8x8-cell markers (code bit 1 = white cell),
/// anti-aliased by exact pixel-area coverage. Throws UnknownId.
BoardRender render_board(const markers::MarkerDictionary& dict, const BoardSpec& spec);

struct ScenePose {
    markers::Homography homography;  // board meters -> image pixels
    double distance = 1.0;           // meters, used for attenuation
};

struct GtMarker {
    int id = 0;
    std::array<Point2, 4> corners;
    bool fully_visible = true;
};

struct GroundTruthFrame {
    std::string file;
    double distance_m = 0.0;
    std::vector<GtMarker> markers;
};

struct Composite {
    Image image;
    GroundTruthFrame truth;
};

/// Inverse-warps the board into a canvas filled with `background`.
/// Throws SingularHomography.
Composite composite_scene(const BoardRender& board, const ScenePose& pose, int width, int height,
                          const Rgb& background, int supersample = 3, double visibility_margin_px = 4.0);

struct DegradationModel {
    Rgb atmospheric_light{0.5, 0.7, 0.8};
    Rgb beta{0.0, 0.0, 0.0};  // per meter, R >= G >= B
    double blur_sigma = 0.0;
    double noise_sigma = 0.0;  // on the [0,1] scale
    double impulse_prob = 0.0;

    void validate() const;
};

/// Named presets: "clean", "low", "moderate", "high".
DegradationModel preset(const std::string& name);

Image apply_underwater(const Image& img, const DegradationModel& model, double distance, std::uint64_t seed);

struct Camera {
    int width = 1920;
    int height = 1080;
    double focal_px = 1400.0;
};

/// Homography for a board whose centre sits at `offset` (meters, camera x/y)
/// and depth `distance`, rotated by yaw (about y), pitch (about x), roll (about z).
ScenePose board_pose(const BoardSpec& spec, const Camera& cam, double distance, double yaw_deg, double pitch_deg,
                     double roll_deg, double offset_x = 0.0, double offset_y = 0.0);

struct DatasetConfig {
    int frames = 20;
    Camera camera;
    BoardSpec board;
    DegradationModel model;
    std::string model_name = "clean";
    Rgb background{-1, -1, -1};    // negative: use the model's atmospheric light
    double distance_start = 3.0;   // approach trajectory, meters
    double distance_end = 1.2;
    double max_tilt_deg = 30.0;
    double max_roll_deg = 180.0;
    double max_offset_m = 0.15;
    double beta_scale_start = 1.0;  // turbidity sweep across the sequence
    double beta_scale_end = 1.0;
    int supersample = 3;
    int dict_count = 50;
    int dict_tau = 13;
    std::uint64_t dict_seed = 13;
    std::filesystem::path dictionary_file;  // overrides generation when set

    static DatasetConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct GroundTruth {
    std::vector<GroundTruthFrame> frames;
    nlohmann::json model;
    nlohmann::json board;
    std::uint64_t seed = 0;
    int width = 0;
    int height = 0;
    std::string dictionary;  // file name relative to the dataset directory

    nlohmann::json to_json() const;
    static GroundTruth from_json(const nlohmann::json& j);
};

/// Writes frame_NNNN.ppm, ground_truth.json and dictionary.txt into out_dir.
GroundTruth generate_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir, std::uint64_t seed);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace uwmark::sim
