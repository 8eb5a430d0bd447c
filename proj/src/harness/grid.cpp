#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "uwmark/error.hpp"
#include "uwmark/harness.hpp"

namespace uwmark::harness {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); }

double mean_corner_distance(const markers::DetectedMarker& d, const sim::GtMarker& g) {
    double s = 0;
    for (int i = 0; i < 4; ++i) s += std::hypot(d.corners[i].x - g.corners[i].x, d.corners[i].y - g.corners[i].y);
    return s / 4;
}

// Bounding boxes of the previous frame's markers, grown by 20% per side.
std::vector<enhance::Roi> feedback_rois(std::span<const markers::DetectedMarker> dets, int width, int height) {
    std::vector<enhance::Roi> rois;
    for (const auto& d : dets) {
        double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
        for (const auto& p : d.corners) {
            x0 = std::min(x0, p.x);
            y0 = std::min(y0, p.y);
            x1 = std::max(x1, p.x);
            y1 = std::max(y1, p.y);
        }
        const double gx = 0.2 * (x1 - x0), gy = 0.2 * (y1 - y0);
        const int ax = std::max(0, static_cast<int>(std::floor(x0 - gx)));
        const int ay = std::max(0, static_cast<int>(std::floor(y0 - gy)));
        const int bx = std::min(width, static_cast<int>(std::ceil(x1 + gx)) + 1);
        const int by = std::min(height, static_cast<int>(std::ceil(y1 + gy)) + 1);
        if (bx > ax && by > ay) rois.push_back({ax, ay, bx - ax, by - ay});
    }
    return rois;
}

}  // namespace

MatchResult match_detections(const sim::GroundTruthFrame& truth, std::span<const markers::DetectedMarker> dets,
                             double threshold) {
    if (!(threshold > 0)) throw Error(ErrorCode::InvalidArgument, "match threshold must be > 0");
    struct Pair {
        double err;
        std::size_t det, gt;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < dets.size(); ++i)
        for (std::size_t j = 0; j < truth.markers.size(); ++j)
            if (dets[i].id == truth.markers[j].id) {
                const double e = mean_corner_distance(dets[i], truth.markers[j]);
                if (e < threshold) pairs.push_back({e, i, j});
            }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.err != b.err) return a.err < b.err;
        return a.det != b.det ? a.det < b.det : a.gt < b.gt;
    });
    MatchResult r;
    r.matched_gt.assign(dets.size(), -1);
    std::vector<bool> gt_used(truth.markers.size(), false);
    for (const auto& p : pairs) {
        if (r.matched_gt[p.det] >= 0 || gt_used[p.gt]) continue;
        r.matched_gt[p.det] = static_cast<int>(p.gt);
        gt_used[p.gt] = true;
        r.corner_errors.push_back(p.err);
    }
    r.tp = static_cast<int>(r.corner_errors.size());
    r.fp = static_cast<int>(dets.size()) - r.tp;
    for (std::size_t j = 0; j < truth.markers.size(); ++j)
        if (!gt_used[j] && truth.markers[j].fully_visible) ++r.fn;
    return r;
}

GridResult run_grid(const RunConfig& config) {
    if (config.filters.empty() || config.detectors.empty())
        throw Error(ErrorCode::ConfigError, "need at least one filter and one detector");
    if (!std::filesystem::is_directory(config.dataset))
        throw Error(ErrorCode::DatasetError, "dataset directory not found: " + config.dataset.string());
    const auto gt = sim::load_ground_truth(config.dataset / "ground_truth.json");
    std::filesystem::path dict_path = config.dictionary;
    if (dict_path.empty()) {
        if (gt.dictionary.empty()) throw Error(ErrorCode::DatasetError, "dataset names no dictionary");
        dict_path = config.dataset / gt.dictionary;
    }
    markers::MarkerDictionary dict;
    try {
        dict = markers::load_dictionary(dict_path);
    } catch (const Error& e) {
        throw Error(ErrorCode::DatasetError, e.what());
    }

    const std::size_t nf = config.filters.size(), nd = config.detectors.size();
    const std::size_t frames = config.max_frames < 0 ? gt.frames.size()
                                                     : std::min<std::size_t>(gt.frames.size(), config.max_frames);
    std::vector<std::vector<markers::DetectedMarker>> previous(nf * nd);  // MBUWWB feedback state per pair
    std::vector<std::set<std::pair<int, int>>> events(nf * nd);             // (frame, gt index) true positives

    GridResult result;
    for (std::size_t f = 0; f < frames; ++f) {
        const auto& truth = gt.frames[f];
        int visible = 0;
        for (const auto& m : truth.markers) visible += m.fully_visible;
        Image img;
        std::string load_error;
        try {
            img = load_image(config.dataset / truth.file);
            if (img.channels() != 3) throw Error(ErrorCode::WrongChannelCount, "frame is not RGB");
        } catch (const Error& e) {
            load_error = e.what();
        }
        const double threshold =
            config.match_threshold_px * (img.empty() ? 1.0 : img.height() / 1080.0);

        for (std::size_t fi = 0; fi < nf; ++fi) {
            const auto& filter = config.filters[fi];
            const bool roi_driven = config.mbuwwb_feedback && std::holds_alternative<enhance::MbuwwbParams>(filter.params);
            GrayU8 shared;
            double shared_ms = 0;
            std::string shared_error = load_error;
            if (!roi_driven && shared_error.empty()) {
                try {
                    const auto t = Clock::now();
                    shared = enhance::enhance_luma(img, filter);
                    shared_ms = ms_since(t);
                } catch (const Error& e) {
                    shared_error = e.what();
                }
            }
            for (std::size_t di = 0; di < nd; ++di) {
                const auto& det = config.detectors[di];
                const std::size_t pair = fi * nd + di;
                EvaluationRecord rec;
                rec.frame_id = static_cast<int>(f);
                rec.filter = filter.label;
                rec.detector = det.label;
                rec.fn = visible;
                std::string error = shared_error;
                std::vector<markers::DetectedMarker> found;
                if (error.empty()) {
                    try {
                        GrayU8 gray;
                        if (roi_driven) {
                            const auto rois = feedback_rois(previous[pair], img.width(), img.height());
                            const auto t = Clock::now();
                            gray = enhance::enhance_luma(img, filter, rois);
                            rec.enhance_ms = ms_since(t);
                        } else {
                            rec.enhance_ms = shared_ms;
                        }
                        const GrayU8& input = roi_driven ? gray : shared;
                        const auto t = Clock::now();
                        if (det.underwater) {
                            auto uw = markers::detect_uw(input, dict, det.params, det.mask);
                            rec.detect_ms = ms_since(t);
                            rec.contour_foreground = uw.contour_foreground;
                            found = std::move(uw.markers);
                        } else {
                            found = markers::detect(input, dict, det.params);
                            rec.detect_ms = ms_since(t);
                        }
                        const auto m = match_detections(truth, found, threshold);
                        rec.detections = static_cast<int>(found.size());
                        rec.tp = m.tp;
                        rec.fp = m.fp;
                        rec.fn = m.fn;
                        if (!m.corner_errors.empty()) {
                            double s = 0;
                            for (double e : m.corner_errors) s += e;
                            rec.mean_corner_err_px = s / m.corner_errors.size();
                        }
                        for (std::size_t k = 0; k < found.size(); ++k)
                            if (m.matched_gt[k] >= 0) {
                                rec.found_ids.push_back(truth.markers[m.matched_gt[k]].id);
                                events[pair].insert({static_cast<int>(f), m.matched_gt[k]});
                            }
                    } catch (const Error& e) {
                        error = e.what();
                        found.clear();
                    }
                }
                rec.error = error;
                previous[pair] = std::move(found);
                result.records.push_back(std::move(rec));
            }
        }
    }

    for (std::size_t di = 0; di < nd; ++di) {
        for (std::size_t a = 0; a < nf; ++a) {
            for (std::size_t b = 0; b < nf; ++b) {
                const auto& ea = events[a * nd + di];
                const auto& eb = events[b * nd + di];
                CrossTabEntry e{config.detectors[di].label, config.filters[a].label, config.filters[b].label, 0, 0};
                for (const auto& ev : ea) e.newly_found += !eb.count(ev);
                for (const auto& ev : eb) e.lost += !ea.count(ev);
                result.crosstab.push_back(std::move(e));
            }
        }
    }
    return result;
}

}  // namespace uwmark::harness
