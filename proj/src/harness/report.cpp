#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "uwmark/error.hpp"
#include "uwmark/harness.hpp"

namespace uwmark::harness {
namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// The error column is free text; keep it to one unquoted field.
std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = c == ',' ? ';' : ' ';
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

template <class F>
auto parse_field(const std::string& s, F conv, std::size_t line_no) {
    try {
        std::size_t used = 0;
        auto v = conv(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + ": bad numeric field '" + s + "'");
    }
}

}  // namespace

void write_csv(std::ostream& out, std::span<const EvaluationRecord> records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.frame_id << ',' << r.filter << ',' << r.detector << ',' << r.detections << ',' << r.tp << ',' << r.fp
            << ',' << r.fn << ',' << fixed(r.mean_corner_err_px, 4) << ',' << fixed(r.enhance_ms, 3) << ','
            << fixed(r.detect_ms, 3) << ',' << sanitize(r.error) << '\n';
    }
}

std::vector<EvaluationRecord> read_csv(std::istream& in) {
    std::vector<EvaluationRecord> out;
    std::string line;
    if (!std::getline(in, line)) return out;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw Error(ErrorCode::SchemaMismatch, "unexpected CSV header '" + line + "'");
    std::size_t line_no = 1;
    auto to_int = [](const std::string& s, std::size_t* n) { return std::stoi(s, n); };
    auto to_double = [](const std::string& s, std::size_t* n) { return std::stod(s, n); };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 11)
            throw Error(ErrorCode::SchemaMismatch,
                        "line " + std::to_string(line_no) + ": expected 11 fields, got " + std::to_string(f.size()));
        EvaluationRecord r;
        r.frame_id = parse_field(f[0], to_int, line_no);
        r.filter = f[1];
        r.detector = f[2];
        r.detections = parse_field(f[3], to_int, line_no);
        r.tp = parse_field(f[4], to_int, line_no);
        r.fp = parse_field(f[5], to_int, line_no);
        r.fn = parse_field(f[6], to_int, line_no);
        r.mean_corner_err_px = parse_field(f[7], to_double, line_no);
        r.enhance_ms = parse_field(f[8], to_double, line_no);
        r.detect_ms = parse_field(f[9], to_double, line_no);
        r.error = f[10];
        if (r.detections < 0 || r.tp < 0 || r.fp < 0 || r.fn < 0 || r.tp + r.fp != r.detections)
            throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + ": inconsistent counts");
        out.push_back(std::move(r));
    }
    return out;
}

void write_crosstab_csv(std::ostream& out, std::span<const CrossTabEntry> entries) {
    out << "detector,filter_a,filter_b,newly_found,lost\n";
    for (const auto& e : entries)
        out << e.detector << ',' << e.filter_a << ',' << e.filter_b << ',' << e.newly_found << ',' << e.lost << '\n';
}

Report summarize(std::span<const EvaluationRecord> records) {
    Report rep;
    std::vector<double> err_sum;
    for (const auto& r : records) {
        std::size_t k = 0;
        while (k < rep.pairs.size() && (rep.pairs[k].filter != r.filter || rep.pairs[k].detector != r.detector)) ++k;
        if (k == rep.pairs.size()) {
            rep.pairs.push_back({r.filter, r.detector});
            err_sum.push_back(0);
        }
        auto& p = rep.pairs[k];
        ++p.frames;
        p.detections += r.detections;
        p.tp += r.tp;
        p.fp += r.fp;
        p.fn += r.fn;
        err_sum[k] += r.mean_corner_err_px * r.tp;
        p.mean_enhance_ms += r.enhance_ms;
        p.mean_detect_ms += r.detect_ms;
        p.errors += !r.error.empty();
    }
    for (std::size_t k = 0; k < rep.pairs.size(); ++k) {
        auto& p = rep.pairs[k];
        p.mean_corner_err_px = p.tp > 0 ? err_sum[k] / p.tp : 0.0;
        p.mean_enhance_ms /= p.frames;
        p.mean_detect_ms /= p.frames;
    }
    return rep;
}

std::string to_markdown(const Report& report) {
    std::ostringstream o;
    o << "| filter | detector | frames | detections | tp | fp | fn | corner err (px) | enhance (ms) | detect (ms) | errors |\n";
    o << "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& p : report.pairs) {
        o << "| " << p.filter << " | " << p.detector << " | " << p.frames << " | " << p.detections << " | " << p.tp
          << " | " << p.fp << " | " << p.fn << " | " << fixed(p.mean_corner_err_px, 3) << " | "
          << fixed(p.mean_enhance_ms, 2) << " | " << fixed(p.mean_detect_ms, 2) << " | " << p.errors << " |\n";
    }
    return o.str();
}

nlohmann::json to_json(const Report& report) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"filter", p.filter},
                         {"detector", p.detector},
                         {"frames", p.frames},
                         {"detections", p.detections},
                         {"tp", p.tp},
                         {"fp", p.fp},
                         {"fn", p.fn},
                         {"mean_corner_err_px", p.mean_corner_err_px},
                         {"mean_enhance_ms", p.mean_enhance_ms},
                         {"mean_detect_ms", p.mean_detect_ms},
                         {"errors", p.errors}});
    }
    return {{"pairs", pairs}};
}

std::string detection_series_csv(std::span<const EvaluationRecord> records, const std::string& filter,
                                  const std::string& detector) {
    std::ostringstream o;
    o << "frame_id,detections\n";
    for (const auto& r : records)
        if (r.filter == filter && r.detector == detector) o << r.frame_id << ',' << r.detections << '\n';
    return o.str();
}

}  // namespace uwmark::harness
