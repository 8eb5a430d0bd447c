#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwmark/enhance.hpp"
#include "uwmark/markers.hpp"
#include "uwmark/simulate.hpp"

namespace uwmark::harness {

struct DetectorSpec {
    std::string label;
    bool underwater = false;  // detect_uw instead of detect
    markers::DetectorParams params;
    markers::UwMaskParams mask;
};

/// Accepts "detect", "detect_uw", or {"type": ..., "label": ..., "params": {...}, "mask": {...}}.
DetectorSpec parse_detector_spec(const nlohmann::json& j);
markers::DetectorParams detector_params_from_json(const nlohmann::json& j, markers::DetectorParams base = {});
markers::UwMaskParams mask_params_from_json(const nlohmann::json& j, markers::UwMaskParams base = {});

struct RunConfig {
    std::filesystem::path dataset;     // directory holding ground_truth.json
    std::filesystem::path dictionary;  // empty: the dataset's own dictionary
    std::vector<enhance::FilterSpec> filters;
    std::vector<DetectorSpec> detectors;
    double match_threshold_px = 5.0;  // at 1080 rows; scaled with frame height
    bool mbuwwb_feedback = true;
    int max_frames = -1;  // < 0: all frames

    /// Relative paths resolve against `base_dir`. Throws ConfigError.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

struct MatchResult {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<double> corner_errors;  // per true positive
    std::vector<int> matched_gt;        // per detection: ground-truth index or -1
};

/// Greedy one-to-one matching by ascending mean corner distance among
/// same-id pairs below `threshold`. Partially visible ground truth may match
/// but never counts as a miss.
MatchResult match_detections(const sim::GroundTruthFrame& truth, std::span<const markers::DetectedMarker> dets,
                             double threshold);

struct EvaluationRecord {
    int frame_id = 0;
    std::string filter;
    std::string detector;
    int detections = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double mean_corner_err_px = 0.0;
    double enhance_ms = 0.0;
    double detect_ms = 0.0;
    std::string error;

    std::vector<int> found_ids;  // ids of matched ground-truth markers (not serialized)
    std::size_t contour_foreground = 0;  // detect_uw only (not serialized)
};

struct CrossTabEntry {
    std::string detector;
    std::string filter_a;
    std::string filter_b;
    long newly_found = 0;  // true-positive events of A missing from B
    long lost = 0;         // true-positive events of B missing from A
};

struct GridResult {
    std::vector<EvaluationRecord> records;
    std::vector<CrossTabEntry> crosstab;
};

/// Throws ConfigError / DatasetError for unusable inputs; per-frame failures
/// are recorded in the error column.
GridResult run_grid(const RunConfig& config);

inline constexpr const char* kCsvHeader =
    "frame_id,filter,detector,detections,tp,fp,fn,mean_corner_err_px,enhance_ms,detect_ms,error";

void write_csv(std::ostream& out, std::span<const EvaluationRecord> records);
/// Throws SchemaMismatch on a wrong header or malformed row.
std::vector<EvaluationRecord> read_csv(std::istream& in);
void write_crosstab_csv(std::ostream& out, std::span<const CrossTabEntry> entries);

struct PairSummary {
    std::string filter;
    std::string detector;
    long frames = 0;
    long detections = 0;
    long tp = 0;
    long fp = 0;
    long fn = 0;
    double mean_corner_err_px = 0.0;  // averaged over true positives
    double mean_enhance_ms = 0.0;
    double mean_detect_ms = 0.0;
    long errors = 0;
};

struct Report {
    std::vector<PairSummary> pairs;  // in order of first appearance
};

Report summarize(std::span<const EvaluationRecord> records);
std::string to_markdown(const Report& report);
nlohmann::json to_json(const Report& report);
/// Two-column CSV (frame_id,detections) for one (filter, detector) pair.
std::string detection_series_csv(std::span<const EvaluationRecord> records, const std::string& filter,
                                  const std::string& detector);

}  // namespace uwmark::harness
