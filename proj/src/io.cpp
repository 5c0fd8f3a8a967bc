#include "actrack/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "actrack/errors.hpp"

namespace actrack::io {

namespace {

std::string location(const std::string& path, int line) {
    return path + ":" + std::to_string(line) + ": ";
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw DataError("write to '" + path + "' failed");
}

// Lines of a text file with 1-based numbers; trailing CR stripped so CRLF
// input is accepted even though output is always LF.
std::vector<std::pair<int, std::string>> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    std::vector<std::pair<int, std::string>> lines;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.emplace_back(number, line);
    }
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

double parse_double_field(const std::string& field, const std::string& path, int line,
                          const char* column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw DataError(location(path, line) + "invalid number '" + field + "' in column " +
                        column);
    return value;
}

int parse_int_field(const std::string& field, const std::string& path, int line,
                    const char* column) {
    int value = 0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw DataError(location(path, line) + "invalid integer '" + field + "' in column " +
                        column);
    return value;
}

// Validated header plus data rows split into exactly `columns` fields.
std::vector<std::pair<int, std::vector<std::string>>> read_csv(const std::string& path,
                                                               const std::string& header,
                                                               std::size_t columns) {
    auto lines = read_lines(path);
    if (lines.empty() || lines.front().second != header)
        throw DataError(location(path, 1) + "expected header '" + header + "'");
    std::vector<std::pair<int, std::vector<std::string>>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& [number, line] = lines[i];
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != columns)
            throw DataError(location(path, number) + "expected " + std::to_string(columns) +
                            " fields, got " + std::to_string(fields.size()));
        rows.emplace_back(number, std::move(fields));
    }
    return rows;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<DetectionRow> detection_rows(const std::vector<std::vector<Detection>>& per_frame) {
    std::vector<DetectionRow> rows;
    for (std::size_t k = 0; k < per_frame.size(); ++k) {
        std::vector<DetectionRow> frame_rows;
        frame_rows.reserve(per_frame[k].size());
        for (const Detection& d : per_frame[k]) {
            DetectionRow row;
            row.frame = static_cast<int>(k);
            row.x = d.x_sub;
            row.y = d.y_sub;
            row.nfa = d.nfa;
            row.r_opt = d.r_opt;
            row.pass = d.pass == DetectionPass::First ? 1 : 2;
            row.scale_r = d.scale_r;
            frame_rows.push_back(row);
        }
        std::sort(frame_rows.begin(), frame_rows.end(),
                  [](const DetectionRow& a, const DetectionRow& b) {
                      return std::tie(a.y, a.x, a.nfa, a.scale_r) <
                             std::tie(b.y, b.x, b.nfa, b.scale_r);
                  });
        rows.insert(rows.end(), frame_rows.begin(), frame_rows.end());
    }
    return rows;
}

void write_detections_csv(const std::string& path, const std::vector<DetectionRow>& rows) {
    auto out = open_output(path);
    out << "frame,x,y,nfa,r_opt,pass,scale_r\n";
    for (const DetectionRow& r : rows) {
        out << r.frame << ',' << format_double(r.x) << ',' << format_double(r.y) << ','
            << format_double(r.nfa) << ',' << format_double(r.r_opt) << ',' << r.pass << ','
            << format_double(r.scale_r) << '\n';
    }
    finish_output(out, path);
}

std::vector<DetectionRow> read_detections_csv(const std::string& path) {
    auto raw = read_csv(path, "frame,x,y,nfa,r_opt,pass,scale_r", 7);
    std::vector<DetectionRow> rows;
    rows.reserve(raw.size());
    for (const auto& [number, f] : raw) {
        DetectionRow row;
        row.frame = parse_int_field(f[0], path, number, "frame");
        row.x = parse_double_field(f[1], path, number, "x");
        row.y = parse_double_field(f[2], path, number, "y");
        row.nfa = parse_double_field(f[3], path, number, "nfa");
        row.r_opt = parse_double_field(f[4], path, number, "r_opt");
        row.pass = parse_int_field(f[5], path, number, "pass");
        row.scale_r = parse_double_field(f[6], path, number, "scale_r");
        if (row.frame < 0)
            throw DataError(location(path, number) + "negative frame index");
        rows.push_back(row);
    }
    return rows;
}

PointCloudSequence to_point_clouds(const std::vector<DetectionRow>& rows, double domain_area,
                                   int frame_count) {
    if (domain_area <= 0.0) throw InvalidConfigError("domain_area must be positive");
    if (frame_count < 0) throw InvalidConfigError("frame_count must be non-negative");
    int needed = frame_count;
    for (const DetectionRow& r : rows) {
        if (r.frame < 0) throw DataError("negative frame index in detection rows");
        if (frame_count > 0 && r.frame >= frame_count)
            throw DataError("frame index " + std::to_string(r.frame) + " outside the declared " +
                            std::to_string(frame_count) + "-frame range");
        needed = std::max(needed, r.frame + 1);
    }
    PointCloudSequence seq;
    seq.domain_area = domain_area;
    seq.frames.resize(static_cast<std::size_t>(needed));
    for (const DetectionRow& r : rows)
        seq.frames[static_cast<std::size_t>(r.frame)].push_back(Point2{r.x, r.y});
    return seq;
}

void write_tracks_csv(const std::string& path, const std::vector<TimedTrack>& tracks) {
    auto out = open_output(path);
    out << "track_id,frame,x,y\n";
    for (std::size_t id = 0; id < tracks.size(); ++id) {
        const TimedTrack& t = tracks[id];
        for (std::size_t i = 0; i < t.positions.size(); ++i) {
            out << id << ',' << (t.start_frame + static_cast<int>(i)) << ','
                << format_double(t.positions[i].x) << ',' << format_double(t.positions[i].y)
                << '\n';
        }
    }
    finish_output(out, path);
}

std::vector<TimedTrack> read_tracks_csv(const std::string& path) {
    auto raw = read_csv(path, "track_id,frame,x,y", 4);
    std::vector<TimedTrack> tracks;
    std::map<long long, std::size_t> index_of;
    for (const auto& [number, f] : raw) {
        long long id = parse_int_field(f[0], path, number, "track_id");
        int frame = parse_int_field(f[1], path, number, "frame");
        double x = parse_double_field(f[2], path, number, "x");
        double y = parse_double_field(f[3], path, number, "y");
        if (id < 0) throw DataError(location(path, number) + "negative track_id");
        if (frame < 0) throw DataError(location(path, number) + "negative frame index");
        auto it = index_of.find(id);
        if (it == index_of.end()) {
            index_of.emplace(id, tracks.size());
            tracks.push_back(TimedTrack{frame, {Point2{x, y}}});
        } else {
            TimedTrack& t = tracks[it->second];
            int expected = t.start_frame + static_cast<int>(t.positions.size());
            if (frame != expected)
                throw DataError(location(path, number) + "track " + std::to_string(id) +
                                " expects frame " + std::to_string(expected) + ", got " +
                                std::to_string(frame));
            t.positions.push_back(Point2{x, y});
        }
    }
    return tracks;
}

std::vector<TimedTrack> to_timed_tracks(const std::vector<Track>& tracks) {
    std::vector<TimedTrack> out;
    out.reserve(tracks.size());
    for (const Track& t : tracks) {
        TimedTrack timed;
        timed.start_frame = t.k0();
        timed.positions.reserve(t.points.size());
        for (const TrackPoint& p : t.points) timed.positions.push_back(Point2{p.x, p.y});
        out.push_back(std::move(timed));
    }
    return out;
}

void write_scores_csv(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& metrics) {
    auto out = open_output(path);
    out << "metric,value\n";
    for (const auto& [name, value] : metrics) out << name << ',' << format_double(value) << '\n';
    finish_output(out, path);
}

std::vector<std::pair<std::string, double>> read_scores_csv(const std::string& path) {
    auto raw = read_csv(path, "metric,value", 2);
    std::vector<std::pair<std::string, double>> metrics;
    metrics.reserve(raw.size());
    for (const auto& [number, f] : raw)
        metrics.emplace_back(f[0], parse_double_field(f[1], path, number, "value"));
    return metrics;
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    auto out = open_output(path);
    for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
    finish_output(out, path);
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
    auto trim = [](const std::string& s) {
        std::size_t first = s.find_first_not_of(" \t");
        if (first == std::string::npos) return std::string();
        std::size_t last = s.find_last_not_of(" \t");
        return s.substr(first, last - first + 1);
    };
    std::map<std::string, std::string> values;
    for (const auto& [number, line] : read_lines(path)) {
        std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw DataError(location(path, number) + "expected key=value, got '" + line + "'");
        values[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
    }
    return values;
}

void write_froc_csv(const std::string& path, const std::vector<FrocPoint>& curve) {
    auto out = open_output(path);
    out << "parameter,tpr,fpr_star\n";
    for (const FrocPoint& p : curve)
        out << format_double(p.parameter) << ',' << format_double(p.tpr) << ','
            << format_double(p.fpr_star) << '\n';
    finish_output(out, path);
}

std::vector<FrocPoint> read_froc_csv(const std::string& path) {
    auto raw = read_csv(path, "parameter,tpr,fpr_star", 3);
    std::vector<FrocPoint> curve;
    curve.reserve(raw.size());
    for (const auto& [number, f] : raw) {
        FrocPoint p;
        p.parameter = parse_double_field(f[0], path, number, "parameter");
        p.tpr = parse_double_field(f[1], path, number, "tpr");
        p.fpr_star = parse_double_field(f[2], path, number, "fpr_star");
        curve.push_back(p);
    }
    return curve;
}

void write_froc_svg(const std::string& path, const std::vector<FrocPoint>& curve) {
    constexpr double kWidth = 640.0, kHeight = 480.0;
    constexpr double kLeft = 70.0, kRight = 20.0, kTop = 20.0, kBottom = 50.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    double fpr_max = 0.0;
    for (const FrocPoint& p : curve)
        if (std::isfinite(p.fpr_star)) fpr_max = std::max(fpr_max, p.fpr_star);
    if (fpr_max <= 0.0) fpr_max = 1.0;
    fpr_max *= 1.05;

    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    auto px = [&](double fpr) { return kLeft + plot_w * (fpr / fpr_max); };
    auto py = [&](double tpr) { return kTop + plot_h * (1.0 - tpr); };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(kWidth)
        << "\" height=\"" << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth) << ' '
        << fmt(kHeight) << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << fmt(kWidth) << "\" height=\"" << fmt(kHeight)
        << "\" fill=\"white\"/>\n"
        << "<path d=\"M " << fmt(kLeft) << ' ' << fmt(kTop) << " L " << fmt(kLeft) << ' '
        << fmt(kTop + plot_h) << " L " << fmt(kLeft + plot_w) << ' ' << fmt(kTop + plot_h)
        << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

    for (int i = 0; i <= 5; ++i) {
        double tpr = i / 5.0;
        double fpr = fpr_max * i / 5.0;
        svg << "<path d=\"M " << fmt(kLeft - 5) << ' ' << fmt(py(tpr)) << " L " << fmt(kLeft)
            << ' ' << fmt(py(tpr)) << "\" stroke=\"black\" stroke-width=\"1\"/>\n"
            << "<text x=\"" << fmt(kLeft - 10) << "\" y=\"" << fmt(py(tpr) + 4)
            << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(tpr) << "</text>\n"
            << "<path d=\"M " << fmt(px(fpr)) << ' ' << fmt(kTop + plot_h) << " L " << fmt(px(fpr))
            << ' ' << fmt(kTop + plot_h + 5) << "\" stroke=\"black\" stroke-width=\"1\"/>\n"
            << "<text x=\"" << fmt(px(fpr)) << "\" y=\"" << fmt(kTop + plot_h + 20)
            << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(fpr) << "</text>\n";
    }
    svg << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 10)
        << "\" font-size=\"14\" text-anchor=\"middle\">false positives per ground-truth object"
        << "</text>\n"
        << "<text x=\"15\" y=\"" << fmt(kTop + plot_h / 2)
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
        << fmt(kTop + plot_h / 2) << ")\">true positive rate</text>\n";

    std::vector<FrocPoint> finite;
    for (const FrocPoint& p : curve)
        if (std::isfinite(p.fpr_star) && std::isfinite(p.tpr)) finite.push_back(p);
    if (!finite.empty()) {
        svg << "<path d=\"";
        for (std::size_t i = 0; i < finite.size(); ++i)
            svg << (i == 0 ? "M " : " L ") << fmt(px(finite[i].fpr_star)) << ' '
                << fmt(py(finite[i].tpr));
        svg << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
        for (const FrocPoint& p : finite)
            svg << "<circle cx=\"" << fmt(px(p.fpr_star)) << "\" cy=\"" << fmt(py(p.tpr))
                << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
    }
    svg << "</svg>\n";

    auto out = open_output(path);
    out << svg.str();
    finish_output(out, path);
}

}  // namespace actrack::io
