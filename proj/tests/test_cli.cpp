#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "test_support.hpp"
#include "uwmark/simulate.hpp"

using namespace uwmark;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(UWMARK_CLI) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run("").status == 1);
    CHECK(run("frobnicate").status == 1);
    CHECK(run("detect --in x.ppm").status == 1);
    CHECK(run("gendict --count 0 --tau 3 --seed 1 --out x").status == 1);
    CHECK(run("report --in x.csv --format html").status == 1);
    CHECK(run("simulate --config c.json --out d --seed notanumber").status == 1);
    CHECK(run("--help").status == 0);
}

TEST_CASE("data errors exit 2") {
    const auto dir = test::scratch_dir("cli_errors");
    CHECK(run("enhance --filter none --in " + (dir / "missing.ppm").string() + " --out " + (dir / "o.ppm").string()).status == 2);
    write_text(dir / "grid.json", R"({"dataset": "/nonexistent/ds", "filters": ["none"], "detectors": ["detect"]})");
    CHECK(run("grid --config " + (dir / "grid.json").string() + " --out " + (dir / "g.csv").string()).status == 2);
    write_text(dir / "bad.csv", "frame,filter\n1,none\n");
    CHECK(run("report --in " + (dir / "bad.csv").string() + " --format md").status == 2);
    write_text(dir / "sim.json", R"({"frames": 2, "turbidity": 3})");
    CHECK(run("simulate --config " + (dir / "sim.json").string() + " --out " + (dir / "ds").string() + " --seed 1").status == 2);
    CHECK(run("gendict --count 3 --tau 36 --seed 1 --out " + (dir / "d.txt").string()).status == 2);
    write_text(dir / "img.ppm", "P6\n2 2\n255\n");
    CHECK(run("detect --dict " + (dir / "d.txt").string() + " --in " + (dir / "img.ppm").string()).status == 2);
    CHECK(run("enhance --filter sharpen --in " + (dir / "img.ppm").string() + " --out " + (dir / "o.ppm").string()).status == 2);
}

TEST_CASE("gendict, simulate, enhance, detect, grid, report") {
    const auto dir = test::scratch_dir("cli_flow");
    const std::string dict = (dir / "dict.txt").string();
    REQUIRE(run("gendict --count 50 --tau 13 --seed 13 --out " + dict).status == 0);
    CHECK(markers::load_dictionary(dict).size() == 50);

    write_text(dir / "sim.json", R"({"frames": 2, "width": 640, "height": 480, "focal_px": 600,
        "model": "clean", "trajectory": {"distance_start": 1.3, "distance_end": 1.1, "max_tilt_deg": 20, "max_offset_m": 0, "max_roll_deg": 10}})");
    REQUIRE(run("simulate --config " + (dir / "sim.json").string() + " --out " + (dir / "ds").string() + " --seed 4").status == 0);
    const std::string frame = (dir / "ds" / "frame_0000.ppm").string();

    const Run det = run("detect --dict " + (dir / "ds" / "dictionary.txt").string() + " --in " + frame);
    CHECK(det.status == 0);
    CHECK(count_lines(det.out) == 9);
    std::istringstream lines(det.out);
    std::string line;
    while (std::getline(lines, line)) CHECK_NOTHROW(markers::parse_detection(line));
    CHECK(count_lines(run("detect --uw --dict " + (dir / "ds" / "dictionary.txt").string() + " --in " + frame).out) == 9);

    const std::string copy = (dir / "copy.ppm").string();
    REQUIRE(run("enhance --filter none --in " + frame + " --out " + copy).status == 0);
    CHECK(load_image(copy) == load_image(frame));
    for (const char* spec : {"wb", "\"CLAHE, clip limit 4\"", "deblur:weight=4", R"('{"filter":"median","params":{"window":5}}')"})
        CHECK(run(std::string("enhance --filter ") + spec + " --in " + frame + " --out " + (dir / "e.ppm").string()).status == 0);

    write_text(dir / "grid.json", R"({"dataset": "ds", "filters": ["none", "wb"], "detectors": ["detect", "detect_uw"]})");
    const std::string csv = (dir / "g.csv").string();
    REQUIRE(run("grid --config " + (dir / "grid.json").string() + " --out " + csv).status == 0);
    CHECK(std::filesystem::exists(dir / "g_crosstab.csv"));
    const Run md = run("report --in " + csv + " --format md");
    CHECK(md.status == 0);
    CHECK(md.out.find("| none |") != std::string::npos);
    const Run js = run("report --in " + csv + " --format json");
    CHECK(js.status == 0);
    CHECK(nlohmann::json::parse(js.out)["pairs"].size() == 4);

    write_text(dir / "empty.csv", "");
    CHECK(run("report --in " + (dir / "empty.csv").string() + " --format md").status == 0);
}
