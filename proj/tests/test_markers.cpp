#include <doctest.h>

#include <bit>
#include <fstream>
#include <set>

#include <Eigen/Geometry>

#include "test_support.hpp"
#include "uwmark/markers.hpp"
#include "uwmark/simulate.hpp"

using namespace uwmark;
using namespace uwmark::markers;

namespace {

// Independent 6x6 bit-grid rotation: new[r][c] = old[5-c][r].
Code rotate_oracle(Code code) {
    Code out = 0;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c)
            if ((code >> ((5 - c) * 6 + r)) & 1U) out |= Code{1} << (r * 6 + c);
    return out;
}

int distance_oracle(Code a, Code b) {
    int best = 64;
    Code rb = b;
    for (int k = 0; k < 4; ++k, rb = rotate_oracle(rb)) best = std::min(best, std::popcount(a ^ rb));
    return best;
}

void check_dictionary_oracle(const MarkerDictionary& d) {
    for (std::size_t i = 0; i < d.size(); ++i) {
        Code r = d.codes[i];
        for (int k = 1; k < 4; ++k) {
            r = rotate_oracle(r);
            CHECK(r != d.codes[i]);
        }
        for (std::size_t j = i + 1; j < d.size(); ++j) CHECK(distance_oracle(d.codes[i], d.codes[j]) >= d.tau);
    }
    CHECK(d.max_correction_bits == (d.tau - 1) / 2);
}

const MarkerDictionary& dict50() {
    static const MarkerDictionary d = generate_dictionary(50, 13, 13);
    return d;
}

Code flip_bits(Code c, int k, Rng& rng) {
    std::set<int> picked;
    while (static_cast<int>(picked.size()) < k) picked.insert(static_cast<int>(rng.below(36)));
    for (int b : picked) c ^= Code{1} << b;
    return c;
}

struct Scene {
    GrayU8 gray;
    sim::GroundTruthFrame truth;
};

Scene render_scene(const std::vector<int>& ids, int rows, int cols, const sim::Camera& cam, double distance,
                   double yaw, double pitch, double roll, double ox = 0.0, double oy = 0.0, int ppc = 16) {
    sim::BoardSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.ids = ids;
    spec.pixels_per_cell = ppc;
    const sim::BoardRender board = sim::render_board(dict50(), spec);
    const sim::ScenePose pose = sim::board_pose(spec, cam, distance, yaw, pitch, roll, ox, oy);
    sim::Composite comp = sim::composite_scene(board, pose, cam.width, cam.height, {1.0, 1.0, 1.0}, 4);
    return {luma_u8(comp.image), comp.truth};
}

double corner_rms(const std::array<Point2, 4>& a, const std::array<Point2, 4>& b) {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::pow(a[i].x - b[i].x, 2) + std::pow(a[i].y - b[i].y, 2);
    return std::sqrt(s / 4.0);
}

const sim::GtMarker* find_gt(const sim::GroundTruthFrame& f, int id) {
    for (const auto& m : f.markers)
        if (m.id == id) return &m;
    return nullptr;
}

GrayU8 rotate_cw(const GrayU8& g) {
    GrayU8 out(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) out.at(g.height - 1 - y, x) = g.at(x, y);
    return out;
}

BinaryImage filled(int w, int h, auto&& inside) {
    BinaryImage b(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) b.data[static_cast<std::size_t>(y) * w + x] = inside(x, y) ? 1 : 0;
    return b;
}

// Foreground pixels with a 4-neighbour that is background or outside the image.
std::set<std::pair<int, int>> boundary_oracle(const BinaryImage& b) {
    std::set<std::pair<int, int>> out;
    auto fg = [&](int x, int y) { return x >= 0 && y >= 0 && x < b.width && y < b.height && b.at(x, y); };
    for (int y = 0; y < b.height; ++y)
        for (int x = 0; x < b.width; ++x)
            if (fg(x, y) && (!fg(x - 1, y) || !fg(x + 1, y) || !fg(x, y - 1) || !fg(x, y + 1))) out.insert({x, y});
    return out;
}

}  // namespace

TEST_CASE("code rotation matches the grid oracle") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const Code c = rng.next() & ((Code{1} << 36) - 1);
        CHECK(rotate_code(c) == rotate_oracle(c));
        CHECK(rotate_code(c, 4) == c);
        CHECK(rotation_aware_distance(c, rotate_code(c, 3)) == 0);
        CHECK(code_from_string(code_to_string(c)) == c);
    }
}

TEST_CASE("generated dictionary satisfies every invariant") {
    const MarkerDictionary& d = dict50();
    CHECK(d.size() == 50);
    CHECK(d.tau == 13);
    CHECK(d.max_correction_bits == 6);
    check_dictionary_oracle(d);
    CHECK(d.min_distance() >= 13);

    CHECK(generate_dictionary(50, 13, 13).codes == d.codes);
    CHECK(generate_dictionary(50, 13, 14).codes != d.codes);

    MarkerDictionary one = generate_dictionary(1, 5, 3);
    CHECK(one.size() == 1);
    check_dictionary_oracle(one);

    try {
        generate_dictionary(3, 36, 1);
        FAIL("expected GenerationStalled");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::GenerationStalled);
    }
}

TEST_CASE("dictionary files") {
    auto dir = test::scratch_dir("dict_io");
    save_dictionary(dict50(), dir / "d.txt");
    MarkerDictionary back = load_dictionary(dir / "d.txt");
    CHECK(back.codes == dict50().codes);
    CHECK(back.tau == 13);
    CHECK(back.max_correction_bits == 6);

    const Code a = dict50().codes[0];
    const Code b = dict50().codes[1];
    const int dab = distance_oracle(a, b);
    {
        std::ofstream f(dir / "two.txt");
        f << "6 2 " << dab << " " << (dab - 1) / 2 << "\n" << code_to_string(a) << "\n" << code_to_string(b) << "\n";
    }
    CHECK(load_dictionary(dir / "two.txt").size() == 2);
    {
        std::ofstream f(dir / "close.txt");
        f << "6 2 " << dab + 1 << " " << dab / 2 << "\n" << code_to_string(a) << "\n" << code_to_string(b) << "\n";
    }
    try {
        load_dictionary(dir / "close.txt");
        FAIL("expected InvariantViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvariantViolation);
    }
    {
        std::ofstream f(dir / "junk.txt");
        f << "6 1 3 1\n0101\n";
    }
    try {
        load_dictionary(dir / "junk.txt");
        FAIL("expected MalformedDictFile");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedDictFile);
    }
}

TEST_CASE("decode corrects up to max_correction_bits flips") {
    const MarkerDictionary& d = dict50();
    Rng rng(99);
    for (int k = 0; k <= d.max_correction_bits; ++k) {
        int failures = 0;
        for (int t = 0; t < 500; ++t) {
            const int id = static_cast<int>(rng.below(d.size()));
            const int rot = static_cast<int>(rng.below(4));
            const Code observed = flip_bits(rotate_code(d.codes[id], rot), k, rng);
            auto dec = decode_bits(observed, d);
            if (!dec || dec->id != id || dec->rotation != rot || dec->hamming_errors != k) ++failures;
        }
        CHECK_MESSAGE(failures == 0, "k=" << k);
    }
    auto exact = decode_bits(d.codes[7], d);
    REQUIRE(exact);
    CHECK(exact->id == 7);
    CHECK(exact->rotation == 0);
    CHECK(exact->hamming_errors == 0);
}

TEST_CASE("decode agrees with the nearest-code oracle") {
    const MarkerDictionary& d = dict50();
    Rng rng(5);
    int rejected_far = 0;
    for (int t = 0; t < 2000; ++t) {
        const int id = static_cast<int>(rng.below(d.size()));
        const int k = 7 + static_cast<int>(rng.below(4));
        const Code observed = flip_bits(rotate_code(d.codes[id], static_cast<int>(rng.below(4))), k, rng);
        int best = 99, ties = 0;
        for (Code c : d.codes)
            for (int r = 0; r < 4; ++r) {
                const int dist = std::popcount(observed ^ rotate_oracle(r == 0 ? c : rotate_code(c, r)));
                if (dist < best) best = dist, ties = 1;
                else if (dist == best) ++ties;
            }
        auto dec = decode_bits(observed, d);
        if (best > d.max_correction_bits || ties > 1) {
            CHECK_FALSE(dec);
            rejected_far += best == d.max_correction_bits + 1;
        } else {
            REQUIRE(dec);
            CHECK(dec->hamming_errors == best);
        }
    }
    CHECK(rejected_far > 0);
}

TEST_CASE("adaptive threshold") {
    GrayU8 flat(20, 20, 128);
    CHECK(adaptive_threshold(flat, 7, 1.0).count() == 0);

    // 6x6 black square on white, window 5: an edge pixel sees 10 white of 25, so its
    // mean is 102 and it is foreground for every C < 102.
    GrayU8 sq(20, 20, 255);
    for (int y = 7; y < 13; ++y)
        for (int x = 7; x < 13; ++x) sq.at(x, y) = 0;
    for (double C : {3.0, 60.0, 101.0}) {
        BinaryImage b = adaptive_threshold(sq, 5, C);
        for (int i = 7; i < 13; ++i) {
            CHECK(b.at(7, i));
            CHECK(b.at(12, i));
            CHECK(b.at(i, 7));
            CHECK(b.at(i, 12));
        }
        CHECK(b.at(3, 3) == 0);
    }
    // window 5 at (9,9): only black pixels -> mean 0, not foreground
    CHECK(adaptive_threshold(sq, 5, 3.0).at(9, 9) == 0);

    Rng rng(3);
    GrayU8 noisy(64, 48);
    for (auto& v : noisy.data) v = static_cast<std::uint8_t>(90 + rng.below(60));
    std::size_t prev = SIZE_MAX;
    for (double C = -10; C <= 20; C += 1.0) {
        const std::size_t n = adaptive_threshold(noisy, 15, C).count();
        CHECK(n <= prev);
        prev = n;
    }

    IntegralImage ii(noisy);
    BinaryImage mask = filled(64, 48, [](int x, int y) { return x > 10 && x < 40 && y < 30; });
    BinaryImage full = adaptive_threshold(noisy, ii, 15, 2.0);
    BinaryImage masked = adaptive_threshold(noisy, ii, 15, 2.0, mask);
    for (std::size_t i = 0; i < full.data.size(); ++i) CHECK(masked.data[i] == (full.data[i] && mask.data[i]));
}

TEST_CASE("contours") {
    CHECK(find_contours(BinaryImage(10, 10)).empty());

    BinaryImage two = filled(30, 20, [](int x, int y) {
        return (x >= 2 && x < 8 && y >= 2 && y < 8) || (x >= 15 && x < 25 && y >= 5 && y < 15);
    });
    CHECK(find_contours(two).size() == 2);

    for (int s : {1, 2, 4, 9}) {
        BinaryImage sq = filled(20, 20, [s](int x, int y) { return x >= 5 && x < 5 + s && y >= 5 && y < 5 + s; });
        auto cs = find_contours(sq);
        REQUIRE(cs.size() == 1);
        std::set<std::pair<int, int>> traced;
        for (PointI p : cs[0]) traced.insert({p.x, p.y});
        CHECK(traced == boundary_oracle(sq));
    }

    BinaryImage disk = filled(40, 40, [](int x, int y) { return (x - 20) * (x - 20) + (y - 19) * (y - 19) <= 100; });
    auto cd = find_contours(disk);
    REQUIRE(cd.size() == 1);
    std::set<std::pair<int, int>> traced;
    for (PointI p : cd[0]) traced.insert({p.x, p.y});
    CHECK(traced == boundary_oracle(disk));

    // a ring yields only its outer border; a blob inside the hole is a separate contour
    BinaryImage ring = filled(40, 40, [](int x, int y) {
        const int r2 = (x - 20) * (x - 20) + (y - 20) * (y - 20);
        return (r2 <= 225 && r2 >= 100) || r2 <= 4;
    });
    CHECK(find_contours(ring).size() == 2);
}

TEST_CASE("quad approximation") {
    const DetectorParams params;
    BinaryImage sq = filled(200, 200, [](int x, int y) { return x >= 50 && x < 110 && y >= 60 && y < 120; });
    auto quads = approx_quads(find_contours(sq), params, 200, 200);
    REQUIRE(quads.size() == 1);
    const Point2 truth[4] = {{50, 60}, {109, 60}, {109, 119}, {50, 119}};
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(quads[0].corners[i].x - truth[i].x) <= 1.0);
        CHECK(std::abs(quads[0].corners[i].y - truth[i].y) <= 1.0);
    }
    // clockwise in y-down coordinates: positive shoelace sum
    double area = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Point2 a = quads[0].corners[i], b = quads[0].corners[(i + 1) % 4];
        area += a.x * b.y - b.x * a.y;
    }
    CHECK(area > 0.0);

    BinaryImage circle = filled(200, 200, [](int x, int y) { return (x - 100) * (x - 100) + (y - 100) * (y - 100) <= 1600; });
    CHECK(approx_quads(find_contours(circle), params, 200, 200).empty());

    BinaryImage tiny = filled(400, 400, [](int x, int y) { return x >= 50 && x < 52 && y >= 50 && y < 52; });
    CHECK(approx_quads(find_contours(tiny), params, 400, 400).empty());
}

TEST_CASE("homography") {
    Quad scaled{{Point2{0, 0}, Point2{24, 0}, Point2{24, 24}, Point2{0, 24}}};
    Homography h = quad_homography(scaled, 8);
    Homography expect = Homography::Identity();
    expect(0, 0) = expect(1, 1) = 3.0;
    CHECK((h - expect).cwiseAbs().maxCoeff() <= 1e-9);

    Rng rng(21);
    for (int t = 0; t < 50; ++t) {
        Homography truth;
        truth << 20 + 10 * rng.uniform(), 5 * (rng.uniform() - 0.5), 100 + 50 * rng.uniform(),
            5 * (rng.uniform() - 0.5), 20 + 10 * rng.uniform(), 80 + 50 * rng.uniform(),
            0.02 * (rng.uniform() - 0.5), 0.02 * (rng.uniform() - 0.5), 1.0;
        Quad q;
        const Point2 canon[4] = {{0, 0}, {8, 0}, {8, 8}, {0, 8}};
        for (int i = 0; i < 4; ++i) q.corners[i] = apply(truth, canon[i]);
        Homography got = quad_homography(q, 8);
        CHECK(got(2, 2) == doctest::Approx(1.0));
        CHECK((got - truth).cwiseAbs().maxCoeff() <= 1e-6 * truth.cwiseAbs().maxCoeff());
    }

    Quad collinear{{Point2{0, 0}, Point2{5, 5}, Point2{10, 10}, Point2{0, 10}}};
    try {
        quad_homography(collinear, 8);
        FAIL("expected DegenerateQuad");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateQuad);
    }
}

TEST_CASE("bit sampling") {
    const DetectorParams params;
    sim::BoardSpec spec;
    spec.rows = spec.cols = 1;
    for (int id : {0, 7, 33}) {
        spec.ids = {id};
        spec.pixels_per_cell = 10;
        sim::BoardRender board = sim::render_board(dict50(), spec);
        GrayU8 g = luma_u8(board.image);
        const auto& mc = board.markers[0].corners;
        const Point2 canon[4] = {{0, 0}, {8, 0}, {8, 8}, {0, 8}};
        std::array<Point2, 4> dst;
        for (int i = 0; i < 4; ++i) dst[i] = board.to_pixel(mc[i]);
        Homography h = homography_from_points(std::span<const Point2, 4>(canon, 4), std::span<const Point2, 4>(dst));
        BitMatrix bits = sample_bits(g, h, params);
        CHECK(bits.border_violations == 0);
        CHECK(bits.payload() == dict50().codes[id]);
    }

    Quad q{{Point2{10, 10}, Point2{90, 10}, Point2{90, 90}, Point2{10, 90}}};
    BitMatrix black = sample_bits(GrayU8(100, 100, 0), quad_homography(q), params);
    CHECK(black.payload() == 0);
    CHECK(black.border_violations == 0);
    BitMatrix white = sample_bits(GrayU8(100, 100, 255), quad_homography(q), params);
    CHECK(white.border_violations == 28);

    Quad off{{Point2{-60, 10}, Point2{40, 10}, Point2{40, 90}, Point2{-60, 90}}};
    try {
        sample_bits(GrayU8(100, 100, 0), quad_homography(off), params);
        FAIL("expected OutOfImage");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfImage);
    }
}

TEST_CASE("corner refinement") {
    // supersampled marker at a sub-pixel offset
    const sim::Camera cam{400, 300, 500};
    Rng rng(4);
    double sq = 0.0;
    int n = 0;
    for (int t = 0; t < 10; ++t) {
        Scene s = render_scene({3}, 1, 1, cam, 0.9, 20 * (rng.uniform() - 0.5), 20 * (rng.uniform() - 0.5),
                               360 * rng.uniform(), 0.01 * rng.uniform(), 0.01 * rng.uniform());
        REQUIRE(s.truth.markers.size() == 1);
        const auto& gt = s.truth.markers[0].corners;
        Quad rough;
        for (int i = 0; i < 4; ++i)
            rough.corners[i] = {gt[i].x + 1.6 * (rng.uniform() - 0.5), gt[i].y + 1.6 * (rng.uniform() - 0.5)};
        Quad refined = refine_corners(s.gray, rough);
        for (int i = 0; i < 4; ++i) {
            sq += std::pow(refined.corners[i].x - gt[i].x, 2) + std::pow(refined.corners[i].y - gt[i].y, 2);
            ++n;
        }
    }
    CHECK(std::sqrt(sq / n) <= 0.3);

    GrayU8 ideal(80, 80, 255);
    for (int y = 20; y < 60; ++y)
        for (int x = 20; x < 60; ++x) ideal.at(x, y) = 0;
    Quad exact{{Point2{19.5, 19.5}, Point2{59.5, 19.5}, Point2{59.5, 59.5}, Point2{19.5, 59.5}}};
    Quad r = refine_corners(ideal, exact);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(r.corners[i].x - exact.corners[i].x) <= 0.5);
        CHECK(std::abs(r.corners[i].y - exact.corners[i].y) <= 0.5);
    }

    Quad flat_in{{Point2{20, 20}, Point2{60, 22}, Point2{58, 61}, Point2{21, 59}}};
    Quad flat_out = refine_corners(GrayU8(80, 80, 128), flat_in);
    for (int i = 0; i < 4; ++i) {
        CHECK(flat_out.corners[i].x == flat_in.corners[i].x);
        CHECK(flat_out.corners[i].y == flat_in.corners[i].y);
    }
}

TEST_CASE("detect on a clean board") {
    const sim::Camera cam{1280, 720, 933};
    Scene s = render_scene({0, 1, 2, 3, 4, 5, 6, 7, 8}, 3, 3, cam, 1.3, 25, -15, 20);
    auto found = detect(s.gray, dict50());
    REQUIRE(found.size() == 9);
    double sq = 0.0;
    for (std::size_t i = 0; i < found.size(); ++i) {
        CHECK(found[i].id == static_cast<int>(i));
        CHECK(found[i].hamming_errors == 0);
        const sim::GtMarker* gt = find_gt(s.truth, found[i].id);
        REQUIRE(gt);
        sq += std::pow(corner_rms(found[i].corners, gt->corners), 2);
    }
    CHECK(std::sqrt(sq / 9) <= 0.7);

    CHECK(detect(GrayU8(320, 240, 200), dict50()).empty());
    CHECK(detect(GrayU8(320, 240, 0), dict50()).empty());
}

TEST_CASE("detection is rotation equivariant") {
    const sim::Camera cam{800, 600, 700};
    Scene s = render_scene({10, 11, 12, 13}, 2, 2, cam, 1.0, 15, 10, -30);
    auto base = detect(s.gray, dict50());
    REQUIRE(base.size() == 4);
    GrayU8 img = s.gray;
    for (int turn = 1; turn <= 3; ++turn) {
        img = rotate_cw(img);
        auto rot = detect(img, dict50());
        REQUIRE(rot.size() == base.size());
        for (std::size_t i = 0; i < base.size(); ++i) {
            CHECK(rot[i].id == base[i].id);
            CHECK(rot[i].rotation == (base[i].rotation + turn) % 4);
            for (int c = 0; c < 4; ++c) {
                Point2 p = base[i].corners[c];
                int w = s.gray.width, h = s.gray.height;
                for (int k = 0; k < turn; ++k) {
                    p = {h - 1 - p.y, p.x};
                    std::swap(w, h);
                }
                CHECK(std::abs(rot[i].corners[c].x - p.x) <= 0.5);
                CHECK(std::abs(rot[i].corners[c].y - p.y) <= 0.5);
            }
        }
    }
}

TEST_CASE("masked detector") {
    const sim::Camera cam{960, 540, 700};
    const DetectorParams params;
    const UwMaskParams mask_params;
    Rng rng(12);
    for (int t = 0; t < 6; ++t) {
        Scene s = render_scene({20, 21, 22, 23, 24, 25, 26, 27, 28}, 3, 3, cam, 1.4 + rng.uniform(),
                               40 * (rng.uniform() - 0.5), 40 * (rng.uniform() - 0.5), 360 * rng.uniform());
        auto plain = detect(s.gray, dict50(), params);
        UwDetection uw = detect_uw(s.gray, dict50(), params, mask_params);
        REQUIRE(uw.markers.size() == plain.size());
        for (std::size_t i = 0; i < plain.size(); ++i) {
            CHECK(uw.markers[i].id == plain[i].id);
            CHECK(uw.markers[i].rotation == plain[i].rotation);
            for (int c = 0; c < 4; ++c) {
                CHECK(std::abs(uw.markers[i].corners[c].x - plain[i].corners[c].x) <= 0.1);
                CHECK(std::abs(uw.markers[i].corners[c].y - plain[i].corners[c].y) <= 0.1);
            }
        }
        const std::size_t unmasked = adaptive_threshold(s.gray, params.adaptive_window, mask_params.aggressive_C).count();
        CHECK(uw.contour_foreground <= unmasked);
        BinaryImage mask = uw_contour_mask(s.gray, params, mask_params);
        CHECK(uw.contour_foreground <= mask.count());
    }
}

TEST_CASE("pose") {
    const CameraIntrinsics cam{800, 800, 320, 240};
    const double L = 0.19;
    auto synth = [&](const Pose& pose) {
        DetectedMarker m;
        const double h = L / 2;
        const Eigen::Vector3d pts[4] = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
        for (int i = 0; i < 4; ++i) m.corners[i] = project(pose, cam, pts[i]);
        return m;
    };

    for (double d : {0.5, 1.0, 2.5, 6.0}) {
        Pose truth;
        truth.translation = {0, 0, d};
        Pose got = estimate_pose(synth(truth), cam, L);
        CHECK(std::abs(got.translation.z() - d) <= 0.01 * d);
        CHECK(std::abs(got.translation.x()) <= 0.01 * d);
        CHECK(std::abs(got.translation.y()) <= 0.01 * d);
    }

    Rng rng(77);
    for (int t = 0; t < 100; ++t) {
        Pose truth;
        const Eigen::Vector3d axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
        const double angle = 0.9 * (rng.uniform() - 0.5) * 2;
        Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        truth.rotation = r * Eigen::AngleAxisd(2 * M_PI * rng.uniform(), Eigen::Vector3d::UnitZ()).toRotationMatrix();
        truth.translation = {0.3 * (rng.uniform() - 0.5), 0.3 * (rng.uniform() - 0.5), 0.6 + 2 * rng.uniform()};
        DetectedMarker m = synth(truth);
        Pose got = estimate_pose(m, cam, L);
        const Eigen::Matrix3d& R = got.rotation;
        CHECK((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(got.translation.z() > 0.0);
        CHECK((got.translation - truth.translation).norm() <= 1e-6 * truth.translation.norm() + 1e-9);

        Pose twice = estimate_pose(m, cam, 2 * L);
        CHECK((twice.translation - 2 * got.translation).norm() <= 1e-9);
    }
}

TEST_CASE("pose reprojection on detected markers") {
    const sim::Camera cam{1280, 720, 933};
    Scene s = render_scene({0, 1, 2, 3, 4, 5, 6, 7, 8}, 3, 3, cam, 1.5, -20, 25, 10, 0.05, -0.03);
    auto found = detect(s.gray, dict50());
    REQUIRE(found.size() == 9);
    const CameraIntrinsics intr{933, 933, (1280 - 1) / 2.0, (720 - 1) / 2.0};
    const double h = 0.19 / 2;
    const Eigen::Vector3d pts[4] = {{-h, -h, 0}, {h, -h, 0}, {h, h, 0}, {-h, h, 0}};
    for (const auto& m : found) {
        Pose p = estimate_pose(m, intr, 0.19);
        std::array<Point2, 4> rep;
        for (int i = 0; i < 4; ++i) rep[i] = project(p, intr, pts[i]);
        CHECK(corner_rms(rep, m.corners) <= 1.0);
        CHECK(p.translation.z() == doctest::Approx(1.5).epsilon(0.15));
    }
}

TEST_CASE("detection line format round trips") {
    DetectedMarker m{17, {Point2{1.25, 2.5}, Point2{30.125, 2.75}, Point2{31, 40.5}, Point2{0.5, 39}}, 3, 2};
    int frame = -1;
    DetectedMarker back = parse_detection(format_detection(42, m), &frame);
    CHECK(frame == 42);
    CHECK(back.id == 17);
    CHECK(back.rotation == 3);
    CHECK(back.hamming_errors == 2);
    for (int i = 0; i < 4; ++i) {
        CHECK(back.corners[i].x == doctest::Approx(m.corners[i].x).epsilon(1e-6));
        CHECK(back.corners[i].y == doctest::Approx(m.corners[i].y).epsilon(1e-6));
    }
    CHECK_THROWS_AS(parse_detection("1 2 3"), Error);
}
