// Command-line front end: dataset simulation, filtering, detection, grid runs
// and reports. Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uwmark/enhance.hpp"
#include "uwmark/error.hpp"
#include "uwmark/harness.hpp"
#include "uwmark/markers.hpp"
#include "uwmark/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uwmark;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
}

// Accepts a bare filter name, a JSON object, `name:key=value,...`, or a
// published table row label.
enhance::FilterSpec filter_from_arg(const std::string& arg) {
    if (!arg.empty() && arg.front() == '{') {
        try {
            return enhance::parse_filter_spec(json::parse(arg));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ConfigError, std::string("bad filter JSON: ") + e.what());
        }
    }
    for (const auto& row : enhance::table3_row_labels())
        if (row == arg) return enhance::filter_spec_for_row(arg);
    const auto colon = arg.find(':');
    if (colon == std::string::npos) return enhance::make_filter_spec(arg);
    json params = json::object();
    std::stringstream rest(arg.substr(colon + 1));
    std::string kv;
    while (std::getline(rest, kv, ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "expected key=value in '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        params[key] = json::accept(value) ? json::parse(value) : json(value);
    }
    return enhance::make_filter_spec(arg.substr(0, colon), params);
}

int cmd_simulate(const fs::path& config_path, const fs::path& out, std::uint64_t seed) {
    auto cfg = sim::DatasetConfig::from_json(read_json(config_path));
    if (!cfg.dictionary_file.empty() && cfg.dictionary_file.is_relative())
        cfg.dictionary_file = config_path.parent_path() / cfg.dictionary_file;
    const auto gt = sim::generate_dataset(cfg, out, seed);
    std::cerr << "wrote " << gt.frames.size() << " frames to " << out.string() << '\n';
    return 0;
}

int cmd_enhance(const std::string& filter, const fs::path& in, const fs::path& out) {
    const auto spec = filter_from_arg(filter);
    save_image(enhance::enhance_dispatch(load_image(in), spec), out);
    return 0;
}

int cmd_detect(const fs::path& dict_path, const fs::path& in, bool uw, int frame_id) {
    const auto dict = markers::load_dictionary(dict_path);
    const GrayU8 gray = luma_u8(load_image(in));
    const auto found = uw ? markers::detect_uw(gray, dict).markers : markers::detect(gray, dict);
    for (const auto& m : found) std::cout << markers::format_detection(frame_id, m) << '\n';
    return 0;
}

int cmd_grid(const fs::path& config_path, const fs::path& out, fs::path crosstab) {
    const auto cfg = harness::RunConfig::from_json(read_json(config_path), config_path.parent_path());
    const auto result = harness::run_grid(cfg);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream csv(out);
    if (!csv) throw Error(ErrorCode::IoFailure, "cannot write " + out.string());
    harness::write_csv(csv, result.records);
    if (crosstab.empty()) crosstab = out.parent_path() / (out.stem().string() + "_crosstab.csv");
    std::ofstream ct(crosstab);
    if (!ct) throw Error(ErrorCode::IoFailure, "cannot write " + crosstab.string());
    harness::write_crosstab_csv(ct, result.crosstab);
    return 0;
}

int cmd_report(const fs::path& in_path, const std::string& format, const std::string& series_filter,
               const std::string& series_detector, const fs::path& series_out) {
    std::ifstream in(in_path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + in_path.string());
    const auto records = harness::read_csv(in);
    const auto report = harness::summarize(records);
    if (format == "md") std::cout << harness::to_markdown(report);
    else std::cout << harness::to_json(report).dump(2) << '\n';
    if (!series_out.empty()) {
        std::ofstream s(series_out);
        if (!s) throw Error(ErrorCode::IoFailure, "cannot write " + series_out.string());
        s << harness::detection_series_csv(records, series_filter, series_detector);
    }
    return 0;
}

int cmd_gendict(int count, int tau, std::uint64_t seed, const fs::path& out) {
    save_dictionary(markers::generate_dictionary(count, tau, seed), out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Underwater fiducial marker toolkit"};
    app.require_subcommand(1);

    std::string config, out_dir, filter, in, out, dict, format = "md", crosstab;
    std::string series_filter = "none", series_detector = "detect", series_out;
    std::uint64_t seed = 0;
    int count = 50, tau = 13, frame_id = 0;
    bool uw = false;

    auto* simulate = app.add_subcommand("simulate", "Render a synthetic underwater dataset");
    simulate->add_option("--config", config, "Dataset config (JSON)")->required();
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--seed", seed, "Random seed")->required();

    auto* enh = app.add_subcommand("enhance", "Apply one enhancement filter to an image");
    enh->add_option("--filter", filter, "Filter name, name:key=value,..., or JSON spec")->required();
    enh->add_option("--in", in, "Input image (.ppm/.pgm/.yuv)")->required();
    enh->add_option("--out", out, "Output image")->required();

    auto* det = app.add_subcommand("detect", "Detect markers and print one line per marker");
    det->add_option("--dict", dict, "Dictionary file")->required();
    det->add_option("--in", in, "Input image")->required();
    det->add_flag("--uw", uw, "Use the masked underwater detector");
    det->add_option("--frame-id", frame_id, "Frame id printed in each line");

    auto* grid = app.add_subcommand("grid", "Run every filter x detector pair over a dataset");
    grid->add_option("--config", config, "Run config (JSON)")->required();
    grid->add_option("--out", out, "Output CSV")->required();
    grid->add_option("--crosstab", crosstab, "Cross-tab CSV (default: <out>_crosstab.csv)");

    auto* report = app.add_subcommand("report", "Summarize a grid CSV");
    report->add_option("--in", in, "Grid CSV")->required();
    report->add_option("--format", format, "md or json")->check(CLI::IsMember({"md", "json"}));
    report->add_option("--series-out", series_out, "Write a per-frame detection series CSV");
    report->add_option("--series-filter", series_filter, "Filter label for the series");
    report->add_option("--series-detector", series_detector, "Detector label for the series");

    auto* gendict = app.add_subcommand("gendict", "Generate a marker dictionary");
    gendict->add_option("--count", count, "Number of codes")->required()->check(CLI::PositiveNumber);
    gendict->add_option("--tau", tau, "Minimum rotation-aware distance")->required()->check(CLI::Range(1, 36));
    gendict->add_option("--seed", seed, "Random seed")->required();
    gendict->add_option("--out", out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*simulate) return cmd_simulate(config, out_dir, seed);
        if (*enh) return cmd_enhance(filter, in, out);
        if (*det) return cmd_detect(dict, in, uw, frame_id);
        if (*grid) return cmd_grid(config, out, crosstab);
        if (*report) return cmd_report(in, format, series_filter, series_detector, series_out);
        if (*gendict) return cmd_gendict(count, tau, seed, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
