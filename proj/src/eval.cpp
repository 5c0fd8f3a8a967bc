#include "actrack/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "actrack/errors.hpp"

namespace actrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Position of track t at absolute frame k, or nullptr when absent.
const Point2* position_at(const TimedTrack& t, int k) {
    const int i = k - t.start_frame;
    if (i < 0 || i >= t.length()) return nullptr;
    return &t.positions[static_cast<std::size_t>(i)];
}

// Number of frames of t that fall inside 0..frame_count-1.
int lifetime_frames(const TimedTrack& t, int frame_count) {
    const int first = std::max(0, t.start_frame);
    const int last = std::min(frame_count - 1, t.last_frame());
    return std::max(0, last - first + 1);
}

// Exact min-cost assignment of n rows to m >= n columns (shortest augmenting
// paths with potentials). Returns the column chosen for each row.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    const int m = static_cast<int>(cost[0].size());
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
    std::vector<int> col_to_row(static_cast<std::size_t>(m) + 1, 0);
    std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        col_to_row[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = col_to_row[j0];
            double delta = kInf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[col_to_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_to_row[j0] != 0);
        do {
            const int j1 = way[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j)
        if (col_to_row[j] != 0) row_to_col[col_to_row[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace

DetectionScore score_detections(const std::vector<Point2>& truth,
                                const std::vector<Point2>& detections, double tolerance) {
    if (!(tolerance > 0.0))
        throw InvalidConfigError("score_detections: tolerance must be > 0");
    struct Edge {
        double dist;
        int truth_idx;
        int det_idx;
    };
    std::vector<Edge> edges;
    for (int i = 0; i < static_cast<int>(truth.size()); ++i)
        for (int j = 0; j < static_cast<int>(detections.size()); ++j) {
            const double d = distance(truth[static_cast<std::size_t>(i)],
                                      detections[static_cast<std::size_t>(j)]);
            if (d <= tolerance) edges.push_back({d, i, j});
        }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.dist, a.truth_idx, a.det_idx) <
               std::tie(b.dist, b.truth_idx, b.det_idx);
    });
    std::vector<char> truth_used(truth.size(), 0);
    std::vector<char> det_used(detections.size(), 0);
    DetectionScore s;
    s.tolerance = tolerance;
    for (const Edge& e : edges) {
        if (truth_used[static_cast<std::size_t>(e.truth_idx)] ||
            det_used[static_cast<std::size_t>(e.det_idx)])
            continue;
        truth_used[static_cast<std::size_t>(e.truth_idx)] = 1;
        det_used[static_cast<std::size_t>(e.det_idx)] = 1;
        ++s.ntp;
    }
    s.nfn = static_cast<int>(truth.size()) - s.ntp;
    s.nfp = static_cast<int>(detections.size()) - s.ntp;
    if (!truth.empty()) {
        s.tpr = static_cast<double>(s.ntp) / static_cast<double>(truth.size());
        s.fpr_star = static_cast<double>(s.nfp) / static_cast<double>(truth.size());
    } else {
        s.tpr = 1.0;
        s.fpr_star = s.nfp > 0 ? kInf : 0.0;
    }
    return s;
}

SensitivityReport froc_and_sensitivity(std::vector<FrocPoint> ladder, double target_fpr) {
    if (ladder.size() < 3)
        throw InvalidConfigError("froc: need at least 3 ladder points");
    std::sort(ladder.begin(), ladder.end(),
              [](const FrocPoint& a, const FrocPoint& b) { return a.parameter < b.parameter; });
    SensitivityReport rep;
    rep.curve = ladder;
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
        const FrocPoint& a = ladder[i];
        const FrocPoint& b = ladder[i + 1];
        const double lo = std::min(a.fpr_star, b.fpr_star);
        const double hi = std::max(a.fpr_star, b.fpr_star);
        if (target_fpr < lo || target_fpr > hi) continue;
        const double dp = b.parameter - a.parameter;
        rep.in_range = true;
        rep.operating_parameter =
            a.fpr_star == b.fpr_star
                ? a.parameter
                : a.parameter + dp * (target_fpr - a.fpr_star) / (b.fpr_star - a.fpr_star);
        rep.s_t = dp > 0.0 ? std::abs((b.tpr - a.tpr) / dp) : 0.0;
        rep.s_f = dp > 0.0 ? std::abs((b.fpr_star - a.fpr_star) / dp) : 0.0;
        return rep;
    }
    return rep;  // never crosses the target: out of range, no extrapolation
}

double track_distance(const TimedTrack& a, const TimedTrack& b, double eps_gate,
                      int frame_count) {
    if (!(eps_gate > 0.0)) throw InvalidConfigError("track_distance: epsGate must be > 0");
    double total = 0.0;
    for (int k = 0; k < frame_count; ++k) {
        const Point2* pa = position_at(a, k);
        const Point2* pb = position_at(b, k);
        if (pa && pb)
            total += std::min(distance(*pa, *pb), eps_gate);
        else if (pa || pb)
            total += eps_gate;
    }
    return total;
}

double dummy_distance(const TimedTrack& a, double eps_gate, int frame_count) {
    if (!(eps_gate > 0.0)) throw InvalidConfigError("dummy_distance: epsGate must be > 0");
    return eps_gate * static_cast<double>(lifetime_frames(a, frame_count));
}

TrackPairing pair_tracks(const std::vector<TimedTrack>& truth,
                         const std::vector<TimedTrack>& estimates, double eps_gate,
                         int frame_count) {
    const int n = static_cast<int>(truth.size());
    const int ne = static_cast<int>(estimates.size());
    TrackPairing out;
    out.truth_to_estimate.assign(static_cast<std::size_t>(n), -1);
    if (n == 0) return out;

    // Columns: the real estimates, then one dummy column per truth row.
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(n));
    std::vector<double> dummy(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        dummy[static_cast<std::size_t>(i)] =
            dummy_distance(truth[static_cast<std::size_t>(i)], eps_gate, frame_count);
        cost[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(ne + n));
        for (int j = 0; j < ne; ++j)
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                track_distance(truth[static_cast<std::size_t>(i)],
                               estimates[static_cast<std::size_t>(j)], eps_gate,
                               frame_count);
        for (int j = 0; j < n; ++j)
            cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(ne + j)] =
                dummy[static_cast<std::size_t>(i)];
    }
    const std::vector<int> row_to_col = solve_assignment(cost);
    for (int i = 0; i < n; ++i) {
        const int j = row_to_col[static_cast<std::size_t>(i)];
        const double c = cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        // A pairing as costly as the dummy carries no information: report the
        // dummy instead (total cost unchanged, deterministic among ties).
        out.truth_to_estimate[static_cast<std::size_t>(i)] =
            (j < ne && c < dummy[static_cast<std::size_t>(i)]) ? j : -1;
        out.total_distance += std::min(c, dummy[static_cast<std::size_t>(i)]);
    }
    return out;
}

TrackScore score_tracks(const std::vector<TimedTrack>& truth,
                        const std::vector<TimedTrack>& estimates, double eps_gate,
                        int frame_count, double match_tolerance) {
    if (match_tolerance <= 0.0) match_tolerance = eps_gate;
    TrackScore s;
    s.pairing = pair_tracks(truth, estimates, eps_gate, frame_count);

    double d_truth_dummy = 0.0;
    for (const TimedTrack& t : truth) d_truth_dummy += dummy_distance(t, eps_gate, frame_count);
    std::vector<char> estimate_paired(estimates.size(), 0);
    for (int j : s.pairing.truth_to_estimate)
        if (j >= 0) estimate_paired[static_cast<std::size_t>(j)] = 1;
    double d_spurious_dummy = 0.0;
    for (std::size_t j = 0; j < estimates.size(); ++j)
        if (!estimate_paired[j]) d_spurious_dummy += dummy_distance(estimates[j], eps_gate, frame_count);

    if (d_truth_dummy > 0.0) {
        s.alpha = 1.0 - s.pairing.total_distance / d_truth_dummy;
        s.beta = (d_truth_dummy - s.pairing.total_distance) / (d_truth_dummy + d_spurious_dummy);
    } else {
        // No ground truth: a vacuously perfect score unless spurious output exists.
        s.alpha = 1.0;
        s.beta = d_spurious_dummy > 0.0 ? 0.0 : 1.0;
    }

    // Position-level counts along the optimal pairing.
    long tp = 0, fn = 0, fp = 0;
    int tp_theta = 0, fn_theta = 0, fp_theta = 0;
    double sq_err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int j = s.pairing.truth_to_estimate[i];
        if (j < 0) {
            fn += lifetime_frames(truth[i], frame_count);
            ++fn_theta;
            continue;
        }
        const TimedTrack& e = estimates[static_cast<std::size_t>(j)];
        bool any_match = false;
        for (int k = 0; k < frame_count; ++k) {
            const Point2* pt = position_at(truth[i], k);
            const Point2* pe = position_at(e, k);
            if (pt && pe) {
                const double d = distance(*pt, *pe);
                if (d <= match_tolerance) {
                    ++tp;
                    sq_err += d * d;
                    any_match = true;
                } else {
                    ++fn;
                    ++fp;
                }
            } else if (pt) {
                ++fn;
            } else if (pe) {
                ++fp;
            }
        }
        if (any_match)
            ++tp_theta;
        else
            ++fn_theta;  // the pairing carried no matching position
    }
    for (std::size_t j = 0; j < estimates.size(); ++j) {
        if (estimate_paired[j]) continue;
        fp += lifetime_frames(estimates[j], frame_count);
        ++fp_theta;
    }
    s.jsc = (tp + fn + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn + fp)
                               : 1.0;
    s.jsc_theta = (tp_theta + fn_theta + fp_theta) > 0
                      ? static_cast<double>(tp_theta) /
                            static_cast<double>(tp_theta + fn_theta + fp_theta)
                      : 1.0;
    s.rmse = tp > 0 ? std::sqrt(sq_err / static_cast<double>(tp)) : 0.0;
    return s;
}

}  // namespace actrack
