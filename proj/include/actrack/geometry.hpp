#pragma once

#include <cmath>
#include <vector>

namespace actrack {

/// Sub-pixel position. Pixel centers sit at integer coordinates, x runs along
/// columns and y along rows.
struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double squared_distance(const Point2& a, const Point2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline double distance(const Point2& a, const Point2& b) {
    return std::sqrt(squared_distance(a, b));
}

/// Integer offset relative to a mask center.
struct Offset {
    int dx = 0;
    int dy = 0;
};

/// A hole-free sub-pixel trajectory: positions[i] is the location at frame
/// start_frame + i. Shared by the simulator (ground truth) and the scorer.
struct TimedTrack {
    int start_frame = 0;
    std::vector<Point2> positions;
    int last_frame() const { return start_frame + static_cast<int>(positions.size()) - 1; }
    int length() const { return static_cast<int>(positions.size()); }
};

}  // namespace actrack
