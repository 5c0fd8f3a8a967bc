#pragma once

#include <vector>

#include "actrack/geometry.hpp"

namespace actrack {

struct DetectionScore {
    int ntp = 0;
    int nfp = 0;
    int nfn = 0;
    double tpr = 0.0;       // ntp / (ntp + nfn)
    double fpr_star = 0.0;  // nfp / (ntp + nfn)
    double tolerance = 0.0;
};

/// Greedy one-to-one nearest matching within `tolerance` pixels: candidate
/// pairs sorted by (distance, truth index, detection index), each side matched
/// at most once. Empty truth yields TPR = 1 and FPR* = +infinity when any
/// detection exists (the ratio has no ground-truth normalizer).
DetectionScore score_detections(const std::vector<Point2>& truth,
                                const std::vector<Point2>& detections, double tolerance);

struct FrocPoint {
    double parameter = 0.0;
    double tpr = 0.0;
    double fpr_star = 0.0;
};

struct SensitivityReport {
    std::vector<FrocPoint> curve;     // sorted by parameter
    double s_t = 0.0;                 // |dTPR/dparameter| at the operating point
    double s_f = 0.0;                 // |dFPR*/dparameter| at the operating point
    double operating_parameter = 0.0; // parameter where FPR* crosses the target
    bool in_range = false;            // false when the ladder never crosses it
};

/// Assembles the FROC curve and measures parameter sensitivity as the secant
/// slopes across the ladder segment where FPR* crosses `target_fpr`
/// (interpolated operating point; no extrapolation outside the ladder).
SensitivityReport froc_and_sensitivity(std::vector<FrocPoint> ladder,
                                       double target_fpr = 0.01);

/// Truncated track distance over frames 0..frame_count-1: frames where both
/// tracks exist contribute min(pointwise distance, eps_gate); frames where
/// exactly one exists contribute eps_gate; frames where neither exists, 0.
double track_distance(const TimedTrack& a, const TimedTrack& b, double eps_gate,
                      int frame_count);

/// Distance of a track to the dummy (never-present) track: eps_gate per frame
/// of the track's lifetime inside 0..frame_count-1.
double dummy_distance(const TimedTrack& a, double eps_gate, int frame_count);

struct TrackPairing {
    std::vector<int> truth_to_estimate;  // estimate index, or -1 for a dummy
    double total_distance = 0.0;         // d(X, Y): optimal assignment cost
};

/// Pads the estimate set with dummy tracks and solves the min-cost one-to-one
/// assignment exactly. A truth whose pairing costs exactly its dummy distance
/// is reported as paired to a dummy (deterministic among tied optima).
TrackPairing pair_tracks(const std::vector<TimedTrack>& truth,
                         const std::vector<TimedTrack>& estimates, double eps_gate,
                         int frame_count);

struct TrackScore {
    double alpha = 0.0;      // 1 - d(X,Y)/d(X,dummies)
    double beta = 0.0;       // (d(X,dummies) - d(X,Y)) / (d(X,dummies) + d(spurious,dummies))
    double jsc = 0.0;        // position-level Jaccard within match_tolerance
    double jsc_theta = 0.0;  // track-level Jaccard
    double rmse = 0.0;       // over matching position pairs (0 when none)
    TrackPairing pairing;
};

/// The five tracking metrics. match_tolerance <= 0 selects eps_gate.
TrackScore score_tracks(const std::vector<TimedTrack>& truth,
                        const std::vector<TimedTrack>& estimates, double eps_gate,
                        int frame_count, double match_tolerance = 0.0);

}  // namespace actrack
