#include "actrack/link.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "actrack/errors.hpp"

namespace actrack {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double second_difference(const Point2& a, const Point2& b, const Point2& c) {
    const double ax = c.x - 2.0 * b.x + a.x;
    const double ay = c.y - 2.0 * b.y + a.y;
    return std::hypot(ax, ay);
}

void validate_linker_config(const LinkerConfig& cfg) {
    if (cfg.min_length < 3)
        throw InvalidConfigError("linker: min_length must be at least 3");
    if (cfg.delta_max.has_value() &&
        (std::isnan(*cfg.delta_max) || *cfg.delta_max <= 0.0))
        throw InvalidConfigError("linker: delta_max must be positive");
}

// Uniform-cell index over available points of one frame for radius queries.
class PointGrid {
public:
    PointGrid(const std::vector<Point2>& pts, const std::vector<std::uint8_t>& avail,
              double cell)
        : pts_(&pts), cell_(cell), bounded_(std::isfinite(cell) && cell > 0.0) {
        for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
            if (!avail[i]) continue;
            if (bounded_)
                cells_[key_of(pts[i])].push_back(i);
            else
                all_.push_back(i);
        }
    }

    template <typename Fn>
    void for_each_within(const Point2& center, double radius, Fn&& fn) const {
        if (!bounded_) {
            for (int i : all_) {
                const double dx = (*pts_)[i].x - center.x;
                const double dy = (*pts_)[i].y - center.y;
                if (dx * dx + dy * dy <= radius * radius) fn(i);
            }
            return;
        }
        const int cx0 = cell_index(center.x - radius);
        const int cx1 = cell_index(center.x + radius);
        const int cy0 = cell_index(center.y - radius);
        const int cy1 = cell_index(center.y + radius);
        for (int cy = cy0; cy <= cy1; ++cy) {
            for (int cx = cx0; cx <= cx1; ++cx) {
                const auto it = cells_.find(pack(cx, cy));
                if (it == cells_.end()) continue;
                for (int i : it->second) {
                    const double dx = (*pts_)[i].x - center.x;
                    const double dy = (*pts_)[i].y - center.y;
                    if (dx * dx + dy * dy <= radius * radius) fn(i);
                }
            }
        }
    }

private:
    int cell_index(double v) const { return static_cast<int>(std::floor(v / cell_)); }
    static std::uint64_t pack(int cx, int cy) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
               static_cast<std::uint32_t>(cy);
    }
    std::uint64_t key_of(const Point2& p) const { return pack(cell_index(p.x), cell_index(p.y)); }

    const std::vector<Point2>* pts_;
    double cell_;
    bool bounded_;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
    std::vector<int> all_;
};

// Dynamic-programming table for one frame: minimal achievable running
// max-acceleration per (point i, predecessor j, length). Lengths are stored
// as l-2 in [0, k-1] for frame index k.
struct DpLayer {
    int n_cur = 0;
    int n_prev = 0;
    int slots = 0;
    std::vector<double> v;
    void init(int n_cur_, int n_prev_, int slots_) {
        n_cur = n_cur_;
        n_prev = n_prev_;
        slots = slots_;
        v.assign(static_cast<std::size_t>(n_cur) * n_prev * slots, kInf);
    }
    double& at(int i, int j, int slot) {
        return v[(static_cast<std::size_t>(i) * n_prev + j) * slots + slot];
    }
    double at(int i, int j, int slot) const {
        return v[(static_cast<std::size_t>(i) * n_prev + j) * slots + slot];
    }
};

std::vector<std::vector<std::uint8_t>> full_availability(const PointCloudSequence& seq) {
    std::vector<std::vector<std::uint8_t>> a(seq.frames.size());
    for (std::size_t k = 0; k < seq.frames.size(); ++k) a[k].assign(seq.frames[k].size(), 1);
    return a;
}

int count_shared_entries(const Track& a, const Track& b) {
    int shared = 0;
    std::size_t ia = 0, ib = 0;
    while (ia < a.points.size() && ib < b.points.size()) {
        if (a.points[ia].frame < b.points[ib].frame)
            ++ia;
        else if (b.points[ib].frame < a.points[ia].frame)
            ++ib;
        else {
            if (a.points[ia].point_index == b.points[ib].point_index) ++shared;
            ++ia;
            ++ib;
        }
    }
    return shared;
}

bool index_sequence_less(const Track& a, const Track& b) {
    if (a.k0() != b.k0()) return a.k0() < b.k0();
    const std::size_t n = std::min(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a.points[i].point_index != b.points[i].point_index)
            return a.points[i].point_index < b.points[i].point_index;
    }
    return a.points.size() < b.points.size();
}

bool track_order_less(const Track& a, const Track& b) {
    if (a.log_nfa != b.log_nfa) return a.log_nfa < b.log_nfa;
    if (a.length() != b.length()) return a.length() < b.length();
    return index_sequence_less(a, b);
}

}  // namespace

int PointCloudSequence::max_frame_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) n = std::max(n, f.size());
    return static_cast<int>(n);
}

double max_acceleration(const std::vector<Point2>& points) {
    if (points.size() < 3)
        throw InvalidTrackError("max_acceleration: need at least 3 points");
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < points.size(); ++i)
        worst = std::max(worst, second_difference(points[i - 1], points[i], points[i + 1]));
    return worst;
}

double max_acceleration(const Track& track) {
    std::vector<Point2> pts;
    pts.reserve(track.points.size());
    for (const TrackPoint& p : track.points) pts.push_back({p.x, p.y});
    return max_acceleration(pts);
}

double track_log_nfa(int frame_count, int max_frame_count, int length, double delta,
                     double domain_area) {
    if (length < 3) throw InvalidTrackError("track NFA: length must be at least 3");
    if (length > frame_count)
        throw InvalidTrackError("track NFA: track longer than the sequence");
    if (max_frame_count < 1)
        throw InvalidTrackError("track NFA: sequence has no points");
    if (!(domain_area > 0.0))
        throw std::invalid_argument("track NFA: domain area must be positive");
    if (delta < 0.0) throw std::invalid_argument("track NFA: negative acceleration");
    if (delta == 0.0) return -kInf;
    return std::log(static_cast<double>(frame_count - length + 1)) +
           length * std::log(static_cast<double>(max_frame_count)) +
           (length - 2) * std::log(kPi * delta * delta / domain_area);
}

double track_nfa(const PointCloudSequence& seq, const Track& track) {
    for (std::size_t i = 1; i < track.points.size(); ++i) {
        if (track.points[i].frame != track.points[i - 1].frame + 1)
            throw InvalidTrackError("track NFA: frames must be consecutive");
    }
    const double delta = max_acceleration(track);
    return std::exp(track_log_nfa(seq.frame_count(), seq.max_frame_count(), track.length(),
                                  delta, seq.domain_area));
}

double default_delta_max(double domain_area) { return std::sqrt(domain_area) / kPi; }

std::optional<Track> best_track(const PointCloudSequence& seq, const LinkerConfig& cfg,
                                const std::vector<std::vector<std::uint8_t>>& available) {
    validate_linker_config(cfg);
    const int K = seq.frame_count();
    if (K < cfg.min_length) return std::nullopt;
    const int n_max = seq.max_frame_count();
    if (n_max == 0) return std::nullopt;
    if (!(seq.domain_area > 0.0))
        throw std::invalid_argument("best_track: domain area must be positive");
    if (!available.empty() && available.size() != seq.frames.size())
        throw std::invalid_argument("best_track: availability mask shape mismatch");
    const std::vector<std::vector<std::uint8_t>> all =
        available.empty() ? full_availability(seq) : available;
    const double delta_max = cfg.delta_max.value_or(default_delta_max(seq.domain_area));

    std::vector<PointGrid> grids;
    grids.reserve(K);
    for (int k = 0; k < K; ++k) grids.emplace_back(seq.frames[k], all[k], delta_max);

    std::vector<DpLayer> dp(K);
    for (int k = 1; k < K; ++k) {
        const int n_cur = static_cast<int>(seq.frames[k].size());
        const int n_prev = static_cast<int>(seq.frames[k - 1].size());
        dp[k].init(n_cur, n_prev, k);
        for (int i = 0; i < n_cur; ++i) {
            if (!all[k][i]) continue;
            for (int j = 0; j < n_prev; ++j) {
                if (!all[k - 1][j]) continue;
                dp[k].at(i, j, 0) = 0.0;  // every available pair seeds length 2
            }
        }
    }
    for (int k = 2; k < K; ++k) {
        DpLayer& cur = dp[k];
        const DpLayer& prev = dp[k - 1];
        for (int i = 0; i < cur.n_cur; ++i) {
            if (!all[k][i]) continue;
            const Point2& xi = seq.frames[k][i];
            for (int j = 0; j < cur.n_prev; ++j) {
                if (!all[k - 1][j]) continue;
                const Point2& xj = seq.frames[k - 1][j];
                const Point2 target{2.0 * xj.x - xi.x, 2.0 * xj.y - xi.y};
                grids[k - 2].for_each_within(target, delta_max, [&](int h) {
                    const double a = second_difference(seq.frames[k - 2][h], xj, xi);
                    const int max_len = std::min(k + 1, K);
                    for (int len = 3; len <= max_len; ++len) {
                        const double tail = prev.at(j, h, len - 3);
                        if (tail == kInf) continue;
                        const double cand = std::max(tail, a);
                        double& slot = cur.at(i, j, len - 2);
                        if (cand < slot) slot = cand;
                    }
                });
            }
        }
    }

    // Pick the terminal state minimizing (log NFA, length, start frame, i, j).
    double best_ln = kInf;
    int bk = -1, bi = -1, bj = -1, bl = -1;
    for (int k = 1; k < K; ++k) {
        const DpLayer& layer = dp[k];
        for (int len = std::max(3, cfg.min_length); len <= k + 1; ++len) {
            for (int i = 0; i < layer.n_cur; ++i) {
                for (int j = 0; j < layer.n_prev; ++j) {
                    const double delta = layer.at(i, j, len - 2);
                    if (delta == kInf) continue;
                    const double ln = track_log_nfa(K, n_max, len, delta, seq.domain_area);
                    bool better = ln < best_ln;
                    if (!better && ln == best_ln) {
                        const int k0_new = k - len + 1;
                        const int k0_old = bk - bl + 1;
                        better = std::tie(len, k0_new, i, j) < std::tie(bl, k0_old, bi, bj);
                    }
                    if (better) {
                        best_ln = ln;
                        bk = k;
                        bi = i;
                        bj = j;
                        bl = len;
                    }
                }
            }
        }
    }
    if (bk < 0) return std::nullopt;

    // Reconstruct backwards: at each step pick the smallest predecessor whose
    // state realizes the stored optimum exactly.
    Track tr;
    std::vector<int> rev{bi, bj};
    int k = bk, i = bi, j = bj, len = bl;
    double v = dp[k].at(i, j, len - 2);
    while (len > 2) {
        const Point2& xi = seq.frames[k][i];
        const Point2& xj = seq.frames[k - 1][j];
        int found = -1;
        const int n_pred = static_cast<int>(seq.frames[k - 2].size());
        for (int h = 0; h < n_pred; ++h) {
            if (!all[k - 2][h]) continue;
            const double a = second_difference(seq.frames[k - 2][h], xj, xi);
            if (a > delta_max) continue;
            const double tail = dp[k - 1].at(j, h, len - 3);
            if (tail == kInf) continue;
            if (std::max(tail, a) == v) {
                found = h;
                v = tail;
                break;
            }
        }
        if (found < 0) throw InvalidTrackError("best_track: reconstruction failed");
        rev.push_back(found);
        i = j;
        j = found;
        --k;
        --len;
    }
    std::reverse(rev.begin(), rev.end());
    const int k0 = bk - bl + 1;
    for (int s = 0; s < bl; ++s) {
        const int frame = k0 + s;
        const int idx = rev[s];
        tr.points.push_back({frame, idx, seq.frames[frame][idx].x, seq.frames[frame][idx].y});
    }
    tr.log_nfa = best_ln;
    tr.nfa = std::exp(best_ln);
    tr.max_accel = dp[bk].at(bi, bj, bl - 2);
    return tr;
}

std::optional<Track> best_track(const PointCloudSequence& seq, const LinkerConfig& cfg) {
    return best_track(seq, cfg, {});
}

std::vector<Track> extract_tracks(const PointCloudSequence& seq, const LinkerConfig& cfg) {
    validate_linker_config(cfg);
    std::vector<Track> out;
    if (!(cfg.epsilon > 0.0)) return out;
    const double log_eps = std::log(cfg.epsilon);
    std::vector<std::vector<std::uint8_t>> avail = full_availability(seq);
    while (true) {
        const std::optional<Track> best = best_track(seq, cfg, avail);
        if (!best.has_value() || best->log_nfa > log_eps) break;
        for (const TrackPoint& p : best->points) avail[p.frame][p.point_index] = 0;
        out.push_back(*best);
    }
    return out;
}

std::vector<Track> extract_tracks_chunked(const PointCloudSequence& seq,
                                          const LinkerConfig& cfg) {
    validate_linker_config(cfg);
    const int K = seq.frame_count();
    if (cfg.chunk_size <= 0) return extract_tracks(seq, cfg);
    if (cfg.overlap <= 0 || cfg.overlap >= cfg.chunk_size)
        throw InvalidConfigError("chunked linking: need 0 < overlap < chunk_size");
    if (cfg.chunk_size >= K) return extract_tracks(seq, cfg);
    if (!(cfg.epsilon > 0.0)) return {};

    const int step = cfg.chunk_size - cfg.overlap;
    std::vector<int> starts;
    for (int s = 0;; s += step) {
        starts.push_back(s);
        if (s + cfg.chunk_size >= K) break;
    }

    std::vector<Track> current;
    for (std::size_t c = 0; c < starts.size(); ++c) {
        const int s = starts[c];
        const int e = std::min(s + cfg.chunk_size, K);
        PointCloudSequence chunk;
        chunk.domain_area = seq.domain_area;
        chunk.frames.assign(seq.frames.begin() + s, seq.frames.begin() + e);
        LinkerConfig sub = cfg;
        sub.chunk_size = 0;
        std::vector<Track> found = extract_tracks(chunk, sub);
        for (Track& t : found)
            for (TrackPoint& p : t.points) p.frame += s;
        std::sort(found.begin(), found.end(), index_sequence_less);

        if (c == 0) {
            current = std::move(found);
            continue;
        }
        std::vector<std::uint8_t> claimed(found.size(), 0);
        std::sort(current.begin(), current.end(), index_sequence_less);
        for (Track& t : current) {
            int best_idx = -1;
            int best_shared = 1;
            for (std::size_t f = 0; f < found.size(); ++f) {
                if (claimed[f]) continue;
                const int shared = count_shared_entries(t, found[f]);
                if (shared > best_shared) {
                    best_shared = shared;
                    best_idx = static_cast<int>(f);
                }
            }
            if (best_idx < 0) continue;
            claimed[best_idx] = 1;
            const Track& ext = found[best_idx];
            const int t_end = t.points.back().frame;
            for (const TrackPoint& p : ext.points)
                if (p.frame > t_end) t.points.push_back(p);
        }
        for (std::size_t f = 0; f < found.size(); ++f)
            if (!claimed[f]) current.push_back(found[f]);
    }

    // Re-score every candidate under the whole-sequence counting rule and keep
    // the meaningful ones, then enforce point-disjointness deterministically.
    const int n_max = seq.max_frame_count();
    const double log_eps = std::log(cfg.epsilon);
    std::vector<Track> verified;
    for (Track& t : current) {
        if (t.length() < cfg.min_length) continue;
        t.max_accel = max_acceleration(t);
        t.log_nfa = track_log_nfa(K, n_max, t.length(), t.max_accel, seq.domain_area);
        t.nfa = std::exp(t.log_nfa);
        if (t.log_nfa <= log_eps) verified.push_back(std::move(t));
    }
    std::sort(verified.begin(), verified.end(), track_order_less);
    std::vector<std::vector<std::uint8_t>> used(seq.frames.size());
    for (std::size_t k = 0; k < seq.frames.size(); ++k) used[k].assign(seq.frames[k].size(), 0);
    std::vector<Track> out;
    for (Track& t : verified) {
        bool clash = false;
        for (const TrackPoint& p : t.points)
            if (used[p.frame][p.point_index]) {
                clash = true;
                break;
            }
        if (clash) continue;
        for (const TrackPoint& p : t.points) used[p.frame][p.point_index] = 1;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace actrack
