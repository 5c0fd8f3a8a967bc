#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "actrack/detect.hpp"
#include "actrack/eval.hpp"
#include "actrack/geometry.hpp"
#include "actrack/link.hpp"

namespace actrack::io {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// One row of the detection CSV: header `frame,x,y,nfa,r_opt,pass,scale_r`.
/// Positions are sub-pixel floating point; `pass` is the 1-based sweep index.
struct DetectionRow {
    int frame = 0;
    double x = 0.0;
    double y = 0.0;
    double nfa = 0.0;
    double r_opt = 0.0;
    int pass = 1;
    double scale_r = 0.0;
};

/// Flattens per-frame detections into rows ordered by (frame, y, x).
std::vector<DetectionRow> detection_rows(const std::vector<std::vector<Detection>>& per_frame);

/// UTF-8, LF line endings, header row first. Throws DataError on I/O failure.
void write_detections_csv(const std::string& path, const std::vector<DetectionRow>& rows);

/// Throws DataError carrying `path:line:` on malformed rows or a wrong header.
std::vector<DetectionRow> read_detections_csv(const std::string& path);

/// Groups rows into per-frame point clouds. frame_count = 0 derives the count
/// from the largest frame index; frames without rows stay empty.
PointCloudSequence to_point_clouds(const std::vector<DetectionRow>& rows, double domain_area,
                                   int frame_count = 0);

/// Track CSV: header `track_id,frame,x,y`, rows sorted by (track_id, frame).
/// Track ids are the positions in `tracks`.
void write_tracks_csv(const std::string& path, const std::vector<TimedTrack>& tracks);

/// Inverse of write_tracks_csv. Tracks are returned in order of first
/// appearance; within a track the frames must be consecutive and ascending.
std::vector<TimedTrack> read_tracks_csv(const std::string& path);

/// Drops linker bookkeeping, keeping start frame and positions.
std::vector<TimedTrack> to_timed_tracks(const std::vector<Track>& tracks);

/// Score CSV: header `metric,value`, one row per metric in the given order.
void write_scores_csv(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& metrics);
std::vector<std::pair<std::string, double>> read_scores_csv(const std::string& path);

/// Plain `key=value` text: one pair per line, written in the given order.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

/// Reads `key=value` lines; blank lines and lines starting with '#' are
/// skipped, whitespace around keys and values is trimmed. Throws DataError
/// with the line number for lines without '='.
std::map<std::string, std::string> read_key_values(const std::string& path);

/// FROC curve CSV: header `parameter,tpr,fpr_star`, rows in parameter order.
void write_froc_csv(const std::string& path, const std::vector<FrocPoint>& curve);
std::vector<FrocPoint> read_froc_csv(const std::string& path);

/// Self-contained SVG 1.1 plot of TPR against FPR*: axes, data polyline and
/// point markers as plain path/text elements, no external assets or scripts.
void write_froc_svg(const std::string& path, const std::vector<FrocPoint>& curve);

}  // namespace actrack::io
