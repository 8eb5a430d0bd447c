#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "uwmark/image.hpp"

namespace uwmark {

namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> read_all(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw Error(ErrorCode::MissingFile, path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::MissingFile, path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Parses whitespace/comment separated header tokens of a binary PNM file.
class PnmHeader {
public:
    explicit PnmHeader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    int next_int(const fs::path& path) {
        skip_space_and_comments();
        std::size_t start = pos_;
        long long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > (1 << 24)) throw Error(ErrorCode::MalformedHeader, path.string() + ": value too large");
            ++pos_;
        }
        if (pos_ == start) throw Error(ErrorCode::MalformedHeader, path.string() + ": expected integer");
        return static_cast<int>(v);
    }

    // Consumes the single whitespace byte that terminates the header.
    std::size_t payload_offset(const fs::path& path) {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw Error(ErrorCode::MalformedHeader, path.string() + ": missing whitespace after maxval");
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 2;  // past the magic number
};

Image load_pnm(const fs::path& path) {
    auto bytes = read_all(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(ErrorCode::MalformedHeader, path.string() + ": not a binary PGM/PPM file");
    const int channels = bytes[1] == '5' ? 1 : 3;
    PnmHeader hdr(bytes);
    const int width = hdr.next_int(path);
    const int height = hdr.next_int(path);
    const int maxval = hdr.next_int(path);
    if (width < 1 || height < 1)
        throw Error(ErrorCode::MalformedHeader, path.string() + ": bad dimensions");
    if (maxval != 255)
        throw Error(ErrorCode::MalformedHeader, path.string() + ": only maxval 255 is supported");
    const std::size_t offset = hdr.payload_offset(path);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (bytes.size() - offset != n * channels)
        throw Error(ErrorCode::TruncatedData,
                    path.string() + ": expected " + std::to_string(n * channels) + " payload bytes, found " +
                        std::to_string(bytes.size() - offset));
    Image img(width, height, channels);
    for (int c = 0; c < channels; ++c) {
        auto dst = img.plane(c);
        for (std::size_t i = 0; i < n; ++i) dst[i] = bytes[offset + i * channels + c] / 255.0;
    }
    return img;
}

fs::path yuv_sidecar(const fs::path& path) {
    fs::path hdr = path;
    hdr.replace_extension(".yuvhdr");
    return hdr;
}

Image load_yuv(const fs::path& path) {
    const fs::path hdr_path = yuv_sidecar(path);
    auto hdr_bytes = read_all(hdr_path);
    std::string text(hdr_bytes.begin(), hdr_bytes.end());
    int width = 0, height = 0;
    std::size_t consumed = 0;
    try {
        width = std::stoi(text, &consumed);
        text = text.substr(consumed);
        height = std::stoi(text, &consumed);
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedHeader, hdr_path.string() + ": expected 'width height'");
    }
    if (width < 1 || height < 1)
        throw Error(ErrorCode::MalformedHeader, hdr_path.string() + ": bad dimensions");
    auto bytes = read_all(path);
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (bytes.size() != 3 * n)
        throw Error(ErrorCode::TruncatedData,
                    path.string() + ": expected " + std::to_string(3 * n) + " bytes, found " +
                        std::to_string(bytes.size()));
    Image img(width, height, 3);
    for (int c = 0; c < 3; ++c) {
        auto dst = img.plane(c);
        for (std::size_t i = 0; i < n; ++i) dst[i] = bytes[c * n + i] / 255.0;
    }
    return img;
}

void write_bytes(const fs::path& path, const std::string& header, const std::vector<unsigned char>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace

Image load_image(const fs::path& path) {
    if (path.extension() == ".yuv") return load_yuv(path);
    return load_pnm(path);
}

void save_image(const Image& img, const fs::path& path) {
    const std::size_t n = img.plane_size();
    const int channels = img.channels();
    std::vector<unsigned char> payload(n * channels);
    if (path.extension() == ".yuv") {
        if (channels != 3) throw Error(ErrorCode::WrongChannelCount, "YUV output needs 3 channels");
        for (int c = 0; c < 3; ++c) {
            auto src = img.plane(c);
            for (std::size_t i = 0; i < n; ++i) payload[c * n + i] = quantize(src[i]);
        }
        write_bytes(path, "", payload);
        write_bytes(yuv_sidecar(path), std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n", {});
        return;
    }
    for (int c = 0; c < channels; ++c) {
        auto src = img.plane(c);
        for (std::size_t i = 0; i < n; ++i) payload[i * channels + c] = quantize(src[i]);
    }
    const std::string header = std::string(channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width()) + " " +
                               std::to_string(img.height()) + "\n255\n";
    write_bytes(path, header, payload);
}

}  // namespace uwmark
