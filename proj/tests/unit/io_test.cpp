#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "actrack/errors.hpp"
#include "actrack/io.hpp"
#include "test_helpers.hpp"

using namespace actrack;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("actrack_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    REQUIRE(out.good());
}

}  // namespace

TEST_CASE("format_double produces shortest round-trip representations") {
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(4.0) == "4");
    CHECK(io::format_double(-2.25) == "-2.25");
    for (double v : {1.0 / 3.0, 0.1, 1e-300, 6.02214076e23, -123.456789012345678,
                     3.141592653589793}) {
        CHECK(std::stod(io::format_double(v)) == v);
    }
}

TEST_CASE("detection CSV writes and reads back exactly") {
    TempDir dir;
    std::vector<io::DetectionRow> rows;
    io::DetectionRow a;
    a.frame = 0;
    a.x = 12.345678901234567;
    a.y = 0.1;
    a.nfa = 1e-300;
    a.r_opt = 3.25;
    a.pass = 2;
    a.scale_r = 3.0;
    io::DetectionRow b;
    b.frame = 2;
    b.x = 1.0 / 3.0;
    b.y = 200.0;
    b.nfa = 0.75;
    b.r_opt = 2.0;
    b.pass = 1;
    b.scale_r = 2.0;
    rows = {a, b};

    const std::string path = dir.file("d.csv");
    io::write_detections_csv(path, rows);

    std::string text = slurp(path);
    CHECK(text.rfind("frame,x,y,nfa,r_opt,pass,scale_r\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);

    auto back = io::read_detections_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].frame == 0);
    CHECK(back[0].x == a.x);
    CHECK(back[0].y == a.y);
    CHECK(back[0].nfa == a.nfa);
    CHECK(back[0].r_opt == a.r_opt);
    CHECK(back[0].pass == 2);
    CHECK(back[0].scale_r == a.scale_r);
    CHECK(back[1].frame == 2);
    CHECK(back[1].x == b.x);
}

TEST_CASE("detection_rows orders by frame, then y, then x") {
    std::vector<std::vector<Detection>> per_frame(2);
    auto det = [](double x, double y) {
        Detection d;
        d.x_sub = x;
        d.y_sub = y;
        return d;
    };
    per_frame[0] = {det(5.0, 9.0), det(1.0, 2.0), det(0.5, 2.0)};
    per_frame[1] = {det(0.0, 0.0)};

    auto rows = io::detection_rows(per_frame);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].frame == 0);
    CHECK(rows[0].x == 0.5);  // same y=2, smaller x first
    CHECK(rows[1].x == 1.0);
    CHECK(rows[2].y == 9.0);
    CHECK(rows[3].frame == 1);
}

TEST_CASE("malformed detection CSVs report the offending line") {
    TempDir dir;

    SUBCASE("wrong header") {
        spit(dir.file("h.csv"), "frame,x,y\n0,1,2\n");
        CHECK_THROWS_WITH_AS(io::read_detections_csv(dir.file("h.csv")),
                             doctest::Contains(":1:"), DataError);
    }
    SUBCASE("bad number with line number") {
        spit(dir.file("n.csv"),
             "frame,x,y,nfa,r_opt,pass,scale_r\n0,1,2,0.5,3,1,3\n0,oops,2,0.5,3,1,3\n");
        CHECK_THROWS_WITH_AS(io::read_detections_csv(dir.file("n.csv")),
                             doctest::Contains(":3:"), DataError);
    }
    SUBCASE("wrong field count") {
        spit(dir.file("c.csv"), "frame,x,y,nfa,r_opt,pass,scale_r\n0,1,2\n");
        CHECK_THROWS_WITH_AS(io::read_detections_csv(dir.file("c.csv")),
                             doctest::Contains(":2:"), DataError);
    }
    SUBCASE("negative frame") {
        spit(dir.file("f.csv"), "frame,x,y,nfa,r_opt,pass,scale_r\n-1,1,2,0.5,3,1,3\n");
        CHECK_THROWS_AS(io::read_detections_csv(dir.file("f.csv")), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(io::read_detections_csv(dir.file("nope.csv")), DataError);
    }
}

TEST_CASE("to_point_clouds groups rows per frame") {
    std::vector<io::DetectionRow> rows(3);
    rows[0].frame = 2;
    rows[0].x = 7.0;
    rows[0].y = 8.0;
    rows[1].frame = 0;
    rows[1].x = 1.0;
    rows[1].y = 2.0;
    rows[2].frame = 2;
    rows[2].x = 9.0;
    rows[2].y = 10.0;

    auto seq = io::to_point_clouds(rows, 100.0 * 100.0);
    REQUIRE(seq.frame_count() == 3);
    CHECK(seq.domain_area == 10000.0);
    CHECK(seq.frames[0].size() == 1);
    CHECK(seq.frames[1].empty());
    REQUIRE(seq.frames[2].size() == 2);
    CHECK(seq.frames[2][0].x == 7.0);
    CHECK(seq.frames[2][1].y == 10.0);

    SUBCASE("declared frame count pads empty trailing frames") {
        auto padded = io::to_point_clouds(rows, 10000.0, 5);
        CHECK(padded.frame_count() == 5);
        CHECK(padded.frames[4].empty());
    }
    SUBCASE("rows outside the declared range are rejected") {
        CHECK_THROWS_AS(io::to_point_clouds(rows, 10000.0, 2), DataError);
    }
    SUBCASE("invalid domain") {
        CHECK_THROWS_AS(io::to_point_clouds(rows, 0.0), InvalidConfigError);
    }
}

TEST_CASE("track CSV round-trips and validates structure") {
    TempDir dir;
    std::vector<TimedTrack> tracks(2);
    tracks[0].start_frame = 3;
    tracks[0].positions = {{1.5, 2.5}, {2.5, 3.5}, {3.5, 4.5}};
    tracks[1].start_frame = 0;
    tracks[1].positions = {{10.0, 20.0}, {11.0, 21.0}};

    const std::string path = dir.file("t.csv");
    io::write_tracks_csv(path, tracks);

    std::string text = slurp(path);
    CHECK(text.rfind("track_id,frame,x,y\n", 0) == 0);
    CHECK(text.find("0,3,1.5,2.5\n") != std::string::npos);
    CHECK(text.find("1,0,10,20\n") != std::string::npos);

    auto back = io::read_tracks_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].start_frame == 3);
    REQUIRE(back[0].positions.size() == 3);
    CHECK(back[0].positions[2].x == 3.5);
    CHECK(back[1].start_frame == 0);
    CHECK(back[1].positions[1].y == 21.0);

    SUBCASE("frame hole is rejected with its line number") {
        spit(dir.file("hole.csv"), "track_id,frame,x,y\n0,0,1,1\n0,2,2,2\n");
        CHECK_THROWS_WITH_AS(io::read_tracks_csv(dir.file("hole.csv")),
                             doctest::Contains(":3:"), DataError);
    }
    SUBCASE("negative id is rejected") {
        spit(dir.file("neg.csv"), "track_id,frame,x,y\n-4,0,1,1\n");
        CHECK_THROWS_AS(io::read_tracks_csv(dir.file("neg.csv")), DataError);
    }
}

TEST_CASE("to_timed_tracks keeps start frame and positions") {
    Track t;
    t.points = {{4, 0, 1.0, 2.0}, {5, 3, 2.0, 3.0}, {6, 1, 3.0, 4.0}};
    auto timed = io::to_timed_tracks({t});
    REQUIRE(timed.size() == 1);
    CHECK(timed[0].start_frame == 4);
    REQUIRE(timed[0].positions.size() == 3);
    CHECK(timed[0].positions[1].x == 2.0);
    CHECK(timed[0].last_frame() == 6);
}

TEST_CASE("score CSV round-trips") {
    TempDir dir;
    const std::string path = dir.file("s.csv");
    std::vector<std::pair<std::string, double>> metrics = {
        {"alpha", 0.9257814327712564}, {"rmse", 0.0}, {"count", 42.0}};
    io::write_scores_csv(path, metrics);
    CHECK(slurp(path).rfind("metric,value\n", 0) == 0);
    auto back = io::read_scores_csv(path);
    REQUIRE(back.size() == 3);
    CHECK(back[0].first == "alpha");
    CHECK(back[0].second == metrics[0].second);
    CHECK(back[2].second == 42.0);
}

TEST_CASE("key=value files parse with comments, blanks and trimming") {
    TempDir dir;
    const std::string path = dir.file("m.txt");
    spit(path, "# header comment\n\nwidth=512\n  snr = 2.5 \nname=vesicle-low-snr4\n");
    auto kv = io::read_key_values(path);
    CHECK(kv.size() == 3);
    CHECK(kv.at("width") == "512");
    CHECK(kv.at("snr") == "2.5");
    CHECK(kv.at("name") == "vesicle-low-snr4");

    SUBCASE("round-trip through write_manifest") {
        io::write_manifest(dir.file("w.txt"), {{"a", "1"}, {"b", "two"}});
        CHECK(slurp(dir.file("w.txt")) == "a=1\nb=two\n");
        auto back = io::read_key_values(dir.file("w.txt"));
        CHECK(back.at("a") == "1");
        CHECK(back.at("b") == "two");
    }
    SUBCASE("line without '=' is rejected with its line number") {
        spit(dir.file("bad.txt"), "ok=1\nnot a pair\n");
        CHECK_THROWS_WITH_AS(io::read_key_values(dir.file("bad.txt")),
                             doctest::Contains(":2:"), DataError);
    }
}

TEST_CASE("FROC CSV and SVG outputs") {
    TempDir dir;
    std::vector<FrocPoint> curve = {{0.1, 0.52, 0.001}, {1.0, 0.83, 0.01}, {10.0, 0.97, 0.12}};
    io::write_froc_csv(dir.file("f.csv"), curve);
    auto back = io::read_froc_csv(dir.file("f.csv"));
    REQUIRE(back.size() == 3);
    CHECK(back[1].parameter == 1.0);
    CHECK(back[1].tpr == 0.83);
    CHECK(back[2].fpr_star == 0.12);

    io::write_froc_svg(dir.file("f.svg"), curve);
    std::string svg = slurp(dir.file("f.svg"));
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") !=
          std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<path") != std::string::npos);
    // self-contained: no links, scripts or raster payloads
    CHECK(svg.find("href") == std::string::npos);
    CHECK(svg.find("<script") == std::string::npos);
    CHECK(svg.find("<image") == std::string::npos);
}
