#include <algorithm>
#include <bit>
#include <fstream>
#include <limits>
#include <sstream>

#include "uwmark/error.hpp"
#include "uwmark/markers.hpp"
#include "uwmark/rng.hpp"

namespace uwmark::markers {
namespace {

constexpr int kBits = kCodeGrid * kCodeGrid;
constexpr Code kMask = (Code{1} << kBits) - 1;
constexpr long kRejectionBudget = 1'000'000;

Code rotate_once(Code c) {
    Code out = 0;
    for (int r = 0; r < kCodeGrid; ++r)
        for (int col = 0; col < kCodeGrid; ++col)
            if (code_bit(c, kCodeGrid - 1 - col, r)) out |= Code{1} << (r * kCodeGrid + col);
    return out;
}

}  // namespace

Code rotate_code(Code c, int quarter_turns) {
    quarter_turns = ((quarter_turns % 4) + 4) % 4;
    for (int i = 0; i < quarter_turns; ++i) c = rotate_once(c);
    return c;
}

int hamming(Code a, Code b) { return std::popcount((a ^ b) & kMask); }

int rotation_aware_distance(Code a, Code b) {
    int best = kBits;
    for (int k = 0; k < 4; ++k) {
        best = std::min(best, hamming(a, b));
        b = rotate_once(b);
    }
    return best;
}

int self_rotation_distance(Code a) {
    int best = kBits;
    Code r = a;
    for (int k = 1; k < 4; ++k) {
        r = rotate_once(r);
        best = std::min(best, hamming(a, r));
    }
    return best;
}

std::string code_to_string(Code c) {
    std::string s(kBits, '0');
    for (int i = 0; i < kBits; ++i)
        if ((c >> i) & 1U) s[i] = '1';
    return s;
}

Code code_from_string(const std::string& s) {
    if (s.size() != static_cast<std::size_t>(kBits))
        throw Error(ErrorCode::MalformedDictFile, "code must have 36 binary digits: '" + s + "'");
    Code c = 0;
    for (int i = 0; i < kBits; ++i) {
        if (s[i] == '1') c |= Code{1} << i;
        else if (s[i] != '0') throw Error(ErrorCode::MalformedDictFile, "non-binary digit in code '" + s + "'");
    }
    return c;
}

int MarkerDictionary::min_distance() const {
    int best = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < codes.size(); ++i)
        for (std::size_t j = i + 1; j < codes.size(); ++j)
            best = std::min(best, rotation_aware_distance(codes[i], codes[j]));
    return best;
}

void MarkerDictionary::validate() const {
    if (grid != kCodeGrid) throw Error(ErrorCode::InvariantViolation, "only 6x6 dictionaries are supported");
    if (tau < 1) throw Error(ErrorCode::InvariantViolation, "tau must be >= 1");
    if (max_correction_bits < 0 || max_correction_bits > (tau - 1) / 2)
        throw Error(ErrorCode::InvariantViolation, "max_correction_bits exceeds floor((tau-1)/2)");
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] & ~kMask) throw Error(ErrorCode::InvariantViolation, "code wider than 36 bits");
        if (self_rotation_distance(codes[i]) == 0)
            throw Error(ErrorCode::InvariantViolation, "code " + std::to_string(i) + " is rotation-symmetric");
        for (std::size_t j = i + 1; j < codes.size(); ++j) {
            const int d = rotation_aware_distance(codes[i], codes[j]);
            if (d < tau)
                throw Error(ErrorCode::InvariantViolation, "codes " + std::to_string(i) + " and " + std::to_string(j) +
                                                               " are at distance " + std::to_string(d) + " < tau");
        }
    }
}

MarkerDictionary generate_dictionary(int count, int tau, std::uint64_t seed) {
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
    if (tau < 1) throw Error(ErrorCode::InvalidArgument, "tau must be >= 1");
    MarkerDictionary dict;
    dict.tau = tau;
    dict.max_correction_bits = (tau - 1) / 2;
    Rng rng(seed);
    long rejections = 0;
    while (static_cast<int>(dict.codes.size()) < count) {
        const Code c = rng.next() & kMask;
        // Self-distance >= tau keeps the decoded rotation unambiguous under
        // correctable errors, not merely the id.
        bool ok = self_rotation_distance(c) >= std::min(tau, kBits);
        for (std::size_t i = 0; ok && i < dict.codes.size(); ++i) ok = rotation_aware_distance(c, dict.codes[i]) >= tau;
        if (ok) {
            dict.codes.push_back(c);
        } else if (++rejections >= kRejectionBudget) {
            throw Error(ErrorCode::GenerationStalled, "no code found after " + std::to_string(rejections) +
                                                          " rejections with " + std::to_string(dict.codes.size()) +
                                                          " of " + std::to_string(count) + " accepted");
        }
    }
    return dict;
}

void save_dictionary(const MarkerDictionary& dict, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << dict.grid << ' ' << dict.codes.size() << ' ' << dict.tau << ' ' << dict.max_correction_bits << '\n';
    for (Code c : dict.codes) out << code_to_string(c) << '\n';
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

MarkerDictionary load_dictionary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open dictionary " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedDictFile, "empty dictionary file");
    std::istringstream header(line);
    MarkerDictionary dict;
    long count = -1;
    if (!(header >> dict.grid >> count >> dict.tau >> dict.max_correction_bits) || count < 0)
        throw Error(ErrorCode::MalformedDictFile, "bad header '" + line + "'");
    std::string extra;
    if (header >> extra) throw Error(ErrorCode::MalformedDictFile, "trailing tokens in header");
    if (dict.grid != kCodeGrid) throw Error(ErrorCode::MalformedDictFile, "unsupported grid " + std::to_string(dict.grid));
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        dict.codes.push_back(code_from_string(line.substr(b, e - b + 1)));
    }
    if (static_cast<long>(dict.codes.size()) != count)
        throw Error(ErrorCode::MalformedDictFile, "header declares " + std::to_string(count) + " codes, file has " +
                                                      std::to_string(dict.codes.size()));
    dict.validate();
    return dict;
}

}  // namespace uwmark::markers
