#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "actrack/geometry.hpp"

namespace actrack {

// Per-frame 2D point clouds plus the area of the spatial domain in pixels^2.
struct PointCloudSequence {
    std::vector<std::vector<Point2>> frames;
    double domain_area = 0.0;
    int frame_count() const { return static_cast<int>(frames.size()); }
    int max_frame_count() const;  // largest per-frame point count
};

struct TrackPoint {
    int frame = 0;
    int point_index = 0;
    double x = 0.0;
    double y = 0.0;
};

// A hole-free trajectory over consecutive frames.
struct Track {
    std::vector<TrackPoint> points;
    double nfa = 0.0;
    double log_nfa = 0.0;
    double max_accel = 0.0;
    int k0() const { return points.empty() ? 0 : points.front().frame; }
    int length() const { return static_cast<int>(points.size()); }
};

struct LinkerConfig {
    double epsilon = 1.0;
    int min_length = 3;
    int chunk_size = 0;  // 0 -> single pass over the whole sequence
    int overlap = 3;
    std::optional<double> delta_max;  // acceleration cap; default sqrt(|Omega|)/pi
};

// Largest Euclidean second difference over interior points.
// Throws InvalidTrackError for tracks shorter than 3.
double max_acceleration(const Track& track);
double max_acceleration(const std::vector<Point2>& points);

// Number of false alarms of a track: (K-l+1) * N_max^l * (pi*delta^2/|Omega|)^(l-2).
// Computed in the log domain; track_nfa returns exp of it (0 when delta = 0).
double track_log_nfa(int frame_count, int max_frame_count, int length, double delta,
                     double domain_area);
double track_nfa(const PointCloudSequence& seq, const Track& track);

double default_delta_max(double domain_area);

// Most meaningful trajectory among available points (lowest NFA; ties: shorter
// length, then earlier start). Returns nothing when no admissible track of
// min_length exists. `available[k][i]` gates point i of frame k; an empty mask
// means every point is available.
std::optional<Track> best_track(const PointCloudSequence& seq, const LinkerConfig& cfg,
                                const std::vector<std::vector<std::uint8_t>>& available);
std::optional<Track> best_track(const PointCloudSequence& seq, const LinkerConfig& cfg);

// Greedy extraction: accept the best track while its NFA is within epsilon,
// remove its points, repeat. epsilon <= 0 extracts nothing.
std::vector<Track> extract_tracks(const PointCloudSequence& seq, const LinkerConfig& cfg);

// Chunked extraction: run extract_tracks on overlapping frame windows, stitch
// tracks from adjacent chunks that share at least two identical (frame, index)
// entries in the overlap, re-verify every candidate under the full-sequence
// counting rule, and enforce point-disjointness. chunk_size >= K degenerates
// to plain extraction.
std::vector<Track> extract_tracks_chunked(const PointCloudSequence& seq,
                                          const LinkerConfig& cfg);

}  // namespace actrack
