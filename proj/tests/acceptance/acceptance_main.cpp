// Acceptance checks for the shipped detection/linking/evaluation pipeline.
// Each criterion prints exactly one line:
//     criterion N: PASS — <measurements>
//     criterion N: FAIL — <measurements>
// and the process exits nonzero when any requested criterion fails.
//
// Run all criteria:            acceptance_tests
// Run a single criterion:      acceptance_tests --criterion 7

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "actrack/cli.hpp"
#include "actrack/detect.hpp"
#include "actrack/errors.hpp"
#include "actrack/eval.hpp"
#include "actrack/io.hpp"
#include "actrack/link.hpp"
#include "actrack/synth.hpp"

namespace {

using namespace actrack;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Pinned pass thresholds. Each constant realizes one clause of the shipped
// acceptance contract; none of them is adjusted to the measured behaviour.

// 1. False-alarm control on pure noise.
constexpr int kNoiseImages = 200;
constexpr double kNoiseMeanMax = 1.3;   // mean detections per image at eps = 1
constexpr double kNoiseTimeMax = 60.0;  // seconds

// 2. Detection quality on the three synthetic particle families.
constexpr double kTprMinAC = 0.97, kFprMaxAC = 0.03;  // types A and C
constexpr double kTprMinB = 0.94, kFprMaxB = 0.06;    // type B (small/faint)
constexpr double kFamiliesTimeMax = 300.0;            // seconds

// 3. Sensitivity of TPR to the detection threshold at the operating point.
constexpr double kSensitivityMax = 1e-3;  // |dTPR/d eps| secant bound
constexpr double kTargetFpr = 0.01;

// 4. Spreading-estimate law: rOpt proportional to the Gaussian sigma.
constexpr double kRatioLo = 1.30, kRatioHi = 1.60;
constexpr double kScanAlpha = 1.7;  // ring width used by the radius scan here

// 5. Sub-pixel localization.
constexpr int kLocSpots = 300;
constexpr double kLocSigmaS = 1.5;   // particle spread, pixels
constexpr double kLocSnr = 4.0;      // moderate noise (>= 3)
constexpr double kLocRadius = 6.0;   // refinement disc radius r
constexpr double kLocMeanMax = 0.12; // mean Euclidean error, pixels

// 6. Dynamic-programming exactness against brute-force enumeration.
constexpr int kDpInstances = 200;
constexpr double kDpRelTol = 1e-9;

// 7. Linker false-alarm control on uniform random clouds.
constexpr int kLinkSequences = 100;
constexpr double kLinkMeanMax = 1.3;

// 8. Chunked/unchunked linking agreement on simulated motion.
constexpr int kChunkSequences = 20;
constexpr double kChunkAgreementMin = 0.95;

// 9. Metric oracles.
constexpr double kMetricTol = 1e-9;

// 10. End-to-end trend over SNR.
constexpr double kJscMin = 0.8;          // at low density, SNR 4
constexpr double kPipelineTimeMax = 900; // seconds

// ---------------------------------------------------------------------------

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double secs() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Removes its directory tree on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / (tag + "_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

// ---------------------------------------------------------------------------
// Shared synthetic scenes: the three particle families rendered as 16 frames
// of 256 jittered grid spots on 256x256, matching the simulator presets.

struct Family {
    Background bg = Background::uniform(2000.0);
    double sigma_s = 2.1;
    DetectorConfig det;
};

Family family(char type) {
    Family f;
    if (type == 'A') {
        f.bg = Background::uniform(2000.0);
        f.sigma_s = 2.1;
        f.det.radii = {3.0};
        f.det.alpha = 2.0;
        f.det.epsilon = 0.3;
    } else if (type == 'B') {
        f.bg = Background::gradient(500.0, 3500.0, 30.0);
        f.sigma_s = 1.4;
        f.det.radii = {2.0};
        f.det.alpha = 3.5;
        f.det.epsilon = 0.3;
    } else {
        f.bg = Background::nonuniform(1000.0, 4000.0, 40.0);
        f.sigma_s = 1.7;
        f.det.radii = {3.0};
        f.det.alpha = 1.25;
        f.det.epsilon = 0.1;
    }
    return f;
}

struct SpotScene {
    std::vector<Image> images;
    std::vector<std::vector<Point2>> truth;
};

SpotScene render_family_scene(char type, double snr, std::uint64_t base_seed) {
    const Family fam = family(type);
    SpotScene scene;
    for (int k = 0; k < 16; ++k) {
        Rng jit(derive_seed(base_seed, 3000 + static_cast<std::uint64_t>(k)));
        SceneSpec spec;
        spec.width = 256;
        spec.height = 256;
        spec.background = fam.bg;
        spec.noise_sigma = 100.0;
        spec.rng_seed = derive_seed(base_seed, static_cast<std::uint64_t>(k));
        std::vector<Point2> truth;
        for (int i = 0; i < 256; ++i) {
            Spot s;
            s.x = 8.0 + (i % 16) * 16.0 + jit.uniform(-3.0, 3.0);
            s.y = 8.0 + (i / 16) * 16.0 + jit.uniform(-3.0, 3.0);
            s.sigma_s = fam.sigma_s;
            s.amplitude = snr_to_amplitude(snr, 100.0);
            spec.spots.push_back(s);
            truth.push_back({s.x, s.y});
        }
        scene.images.push_back(render_frame(spec).image);
        scene.truth.push_back(std::move(truth));
    }
    return scene;
}

DetectionScore score_scene(const SpotScene& scene, const DetectorConfig& det) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < scene.images.size(); ++k) {
        std::vector<Detection> dets = detect_multiscale(scene.images[k], det);
        std::vector<Point2> pts;
        pts.reserve(dets.size());
        for (const Detection& d : dets) pts.push_back({d.x_sub, d.y_sub});
        DetectionScore sc = score_detections(scene.truth[k], pts, 4.0);
        tp += sc.ntp;
        fp += sc.nfp;
        fn += sc.nfn;
    }
    DetectionScore total;
    total.ntp = static_cast<int>(tp);
    total.nfp = static_cast<int>(fp);
    total.nfn = static_cast<int>(fn);
    total.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
    total.fpr_star = static_cast<double>(fp) / static_cast<double>(tp + fn);
    total.tolerance = 4.0;
    return total;
}

// ---------------------------------------------------------------------------
// Criterion 1: on pure-noise images the detector keeps its false-alarm
// promise: at eps = 1 the mean number of detections stays near one.

Outcome criterion1() {
    Timer timer;
    DetectionModel model;
    model.kernels = build_kernels(3.0, 2.0);
    model.epsilon = 1.0;
    model.grid_size = resolve_grid_size(256, 256, model.kernels);
    model.sigma_mode = SigmaMode::Global;
    long total = 0;
    for (int i = 0; i < kNoiseImages; ++i) {
        SceneSpec spec;
        spec.width = 256;
        spec.height = 256;
        spec.background = Background::uniform(1000.0);
        spec.noise_sigma = 100.0;
        spec.rng_seed = derive_seed(101, static_cast<std::uint64_t>(i));
        RenderedFrame frame = render_frame(spec);
        model.sigma = estimate_noise_sigma(frame.image);
        total += static_cast<long>(detect_with_hiding(frame.image, model).size());
    }
    const double mean = static_cast<double>(total) / kNoiseImages;
    const double elapsed = timer.secs();
    Outcome o;
    o.pass = mean <= kNoiseMeanMax && elapsed < kNoiseTimeMax;
    o.detail = strf("mean detections %.3f (bound %.2f) over %d noise images, eps=1, R=3, "
                    "alpha=2; %.1fs (bound %.0fs)",
                    mean, kNoiseMeanMax, kNoiseImages, elapsed, kNoiseTimeMax);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 2: detection quality per particle family and SNR.

Outcome criterion2() {
    Timer timer;
    Outcome o;
    o.pass = true;
    std::string detail;
    for (char type : {'A', 'B', 'C'}) {
        const double tpr_min = type == 'B' ? kTprMinB : kTprMinAC;
        const double fpr_max = type == 'B' ? kFprMaxB : kFprMaxAC;
        detail += strf("%s%c:", detail.empty() ? "" : " | ", type);
        for (double snr : {2.0, 3.0, 4.0}) {
            SpotScene scene = render_family_scene(type, snr, 20250801ull);
            DetectionScore sc = score_scene(scene, family(type).det);
            const bool ok = sc.tpr >= tpr_min && sc.fpr_star <= fpr_max;
            if (!ok) o.pass = false;
            detail += strf(" snr%g %.3f/%.4f%s", snr, sc.tpr, sc.fpr_star, ok ? "" : "(!)");
        }
        detail += strf(" [need tpr>=%.2f fpr<=%.2f]", tpr_min, fpr_max);
    }
    const double elapsed = timer.secs();
    if (elapsed >= kFamiliesTimeMax) o.pass = false;
    o.detail = detail + strf("; %.1fs (bound %.0fs)", elapsed, kFamiliesTimeMax);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 3: TPR sensitivity to the detection threshold, measured across a
// ladder spanning two decades around the FPR* = 0.01 operating point on the
// type A scene at SNR 2.

Outcome criterion3() {
    SpotScene scene = render_family_scene('A', 2.0, 20250801ull);
    std::vector<FrocPoint> ladder;
    std::string curve;
    for (double eps : {1.0, 3.1622776601683795, 10.0, 31.622776601683793, 100.0}) {
        DetectorConfig det = family('A').det;
        det.epsilon = eps;
        DetectionScore sc = score_scene(scene, det);
        FrocPoint p;
        p.parameter = eps;
        p.tpr = sc.tpr;
        p.fpr_star = sc.fpr_star;
        ladder.push_back(p);
        curve += strf(" (%g: %.4f/%.4f)", eps, sc.tpr, sc.fpr_star);
    }
    SensitivityReport rep = froc_and_sensitivity(ladder, kTargetFpr);
    Outcome o;
    o.pass = rep.in_range && std::abs(rep.s_t) <= kSensitivityMax;
    o.detail = strf("|dTPR/deps| = %.3g (bound %.0e) at operating eps %.3g (FPR*=%.2g, "
                    "in_range=%d); ladder%s",
                    rep.s_t, kSensitivityMax, rep.operating_parameter, kTargetFpr,
                    rep.in_range ? 1 : 0, curve.c_str());
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 4: the radius scan recovers the linear rOpt/sigma law on
// noiseless Gaussian spots.

Outcome criterion4() {
    KernelLadder ladder(kScanAlpha, 24.0);
    Outcome o;
    o.pass = true;
    std::string detail;
    for (double sig : {2.0, 4.0, 6.0, 10.0}) {
        SceneSpec spec;
        spec.width = 320;
        spec.height = 320;
        spec.background = Background::uniform(1000.0);
        spec.spots.push_back({160.0, 160.0, sig, 500.0});
        Image img = render_clean(spec);
        RadiusProfile prof = r_opt_scan(img, 160, 160, ladder, SigmaMode::Global, 1.0);
        const double ratio = prof.r_opt / sig;
        const bool ok = ratio >= kRatioLo && ratio <= kRatioHi;
        if (!ok) o.pass = false;
        detail += strf("%ssigma %g -> rOpt %g (ratio %.3f%s)", detail.empty() ? "" : ", ", sig,
                       prof.r_opt, ratio, ok ? "" : " !");
    }
    o.detail = detail + strf("; required ratio in [%.2f, %.2f], scan alpha %.1f", kRatioLo,
                             kRatioHi, kScanAlpha);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 5: sub-pixel localization precision on planted spots.

struct LocStats {
    int matched = 0;
    double mean = 0.0;
    double max = 0.0;
};

LocStats localization_error(double snr) {
    LocStats st;
    double sum = 0.0;
    for (int i = 0; i < kLocSpots; ++i) {
        Rng pos(derive_seed(555, static_cast<std::uint64_t>(i)));
        const double tx = 48.0 + pos.uniform(-0.5, 0.5);
        const double ty = 48.0 + pos.uniform(-0.5, 0.5);
        SceneSpec spec;
        spec.width = 96;
        spec.height = 96;
        spec.background = Background::uniform(1000.0);
        spec.noise_sigma = 100.0;
        spec.rng_seed = derive_seed(556, static_cast<std::uint64_t>(i));
        spec.spots.push_back({tx, ty, kLocSigmaS, snr_to_amplitude(snr, 100.0)});
        RenderedFrame frame = render_frame(spec);
        DetectorConfig det;
        det.subpixel_radius = kLocRadius;
        std::vector<Detection> dets = detect_multiscale(frame.image, det);
        double best = std::numeric_limits<double>::infinity();
        for (const Detection& d : dets)
            best = std::min(best, std::hypot(d.x_sub - tx, d.y_sub - ty));
        if (best <= 4.0) {
            ++st.matched;
            sum += best;
            st.max = std::max(st.max, best);
        }
    }
    st.mean = st.matched ? sum / st.matched : std::numeric_limits<double>::infinity();
    return st;
}

Outcome criterion5() {
    const LocStats at = localization_error(kLocSnr);
    const LocStats diag = localization_error(12.0);  // diagnostic only
    Outcome o;
    o.pass = at.matched == kLocSpots && at.mean <= kLocMeanMax;
    o.detail = strf("mean error %.3f px (bound %.2f) over %d/%d spots at sigma_s=%.1f, "
                    "SNR=%g, r=%g; diagnostic at SNR 12: %.3f px",
                    at.mean, kLocMeanMax, at.matched, kLocSpots, kLocSigmaS, kLocSnr,
                    kLocRadius, diag.mean);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 6: the track search equals brute-force enumeration.

struct BruteBest {
    bool found = false;
    double log_nfa = std::numeric_limits<double>::infinity();
};

BruteBest brute_best(const PointCloudSequence& seq, const LinkerConfig& cfg, double delta_max) {
    BruteBest best;
    const int frame_count = seq.frame_count();
    const int n_max = seq.max_frame_count();
    for (int len = cfg.min_length; len <= frame_count; ++len) {
        for (int k0 = 0; k0 + len <= frame_count; ++k0) {
            bool feasible = true;
            for (int s = 0; s < len; ++s)
                if (seq.frames[static_cast<std::size_t>(k0 + s)].empty()) feasible = false;
            if (!feasible) continue;
            std::vector<int> idx(static_cast<std::size_t>(len), 0);
            while (true) {
                std::vector<Point2> pts(static_cast<std::size_t>(len));
                for (int s = 0; s < len; ++s)
                    pts[static_cast<std::size_t>(s)] =
                        seq.frames[static_cast<std::size_t>(k0 + s)][static_cast<std::size_t>(
                            idx[static_cast<std::size_t>(s)])];
                const double delta = max_acceleration(pts);
                if (delta <= delta_max) {
                    const double ln =
                        track_log_nfa(frame_count, n_max, len, delta, seq.domain_area);
                    if (!best.found || ln < best.log_nfa) {
                        best.found = true;
                        best.log_nfa = ln;
                    }
                }
                int pos = len - 1;
                while (pos >= 0) {
                    if (++idx[static_cast<std::size_t>(pos)] <
                        static_cast<int>(seq.frames[static_cast<std::size_t>(k0 + pos)].size()))
                        break;
                    idx[static_cast<std::size_t>(pos)] = 0;
                    --pos;
                }
                if (pos < 0) break;
            }
        }
    }
    return best;
}

Outcome criterion6() {
    LinkerConfig cfg;  // min_length 3, automatic acceleration cap
    int mismatches = 0, with_track = 0;
    for (int trial = 0; trial < kDpInstances; ++trial) {
        Rng rng(derive_seed(1213, static_cast<std::uint64_t>(trial)));
        PointCloudSequence seq;
        seq.domain_area = 64.0 * 64.0;
        const int frame_count = 2 + static_cast<int>(rng.uniform() * 4.0);  // 2..5
        seq.frames.resize(static_cast<std::size_t>(frame_count));
        for (auto& fr : seq.frames) {
            const int n = static_cast<int>(rng.uniform() * 5.0);  // 0..4
            for (int i = 0; i < n; ++i)
                fr.push_back({rng.uniform(0.0, 64.0), rng.uniform(0.0, 64.0)});
        }
        const double delta_max = default_delta_max(seq.domain_area);
        const BruteBest brute = brute_best(seq, cfg, delta_max);
        const std::optional<Track> dp = best_track(seq, cfg);
        if (brute.found != dp.has_value()) {
            ++mismatches;
            continue;
        }
        if (!dp) continue;
        ++with_track;
        const double a = dp->log_nfa, b = brute.log_nfa;
        const bool equal = (std::isinf(a) && std::isinf(b) && a < 0 && b < 0) ||
                           std::abs(a - b) <= kDpRelTol * std::max(1.0, std::abs(b));
        if (!equal) ++mismatches;
    }
    Outcome o;
    o.pass = mismatches == 0;
    o.detail = strf("%d mismatches over %d random instances (K<=5, N<=4; %d instances had an "
                    "admissible track)",
                    mismatches, kDpInstances, with_track);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 7: the linker keeps its false-alarm promise on uniform clouds.

Outcome criterion7() {
    long plain_total = 0, chunk_total = 0;
    for (int s = 0; s < kLinkSequences; ++s) {
        Rng rng(derive_seed(20250807, static_cast<std::uint64_t>(s)));
        PointCloudSequence seq;
        seq.domain_area = 512.0 * 512.0;
        seq.frames.resize(10);
        for (auto& fr : seq.frames)
            for (int i = 0; i < 20; ++i)
                fr.push_back({rng.uniform(0.0, 512.0), rng.uniform(0.0, 512.0)});
        LinkerConfig plain;
        plain_total += static_cast<long>(extract_tracks(seq, plain).size());
        LinkerConfig chunked;
        chunked.chunk_size = 6;
        chunked.overlap = 3;
        chunk_total += static_cast<long>(extract_tracks_chunked(seq, chunked).size());
    }
    const double plain_mean = static_cast<double>(plain_total) / kLinkSequences;
    const double chunk_mean = static_cast<double>(chunk_total) / kLinkSequences;
    Outcome o;
    o.pass = plain_mean <= kLinkMeanMax && chunk_mean <= kLinkMeanMax;
    o.detail = strf("mean accepted tracks %.2f plain, %.2f chunked (bound %.2f) over %d "
                    "uniform sequences (K=10, N=20, eps=1)",
                    plain_mean, chunk_mean, kLinkMeanMax, kLinkSequences);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 8: chunked extraction recovers the assignments of the single-pass
// extraction on simulated Brownian motion at low density.

using LinkKey = std::tuple<int, int, int>;  // (frame, index, next index)

std::set<LinkKey> track_links(const std::vector<Track>& tracks) {
    std::set<LinkKey> links;
    for (const Track& t : tracks)
        for (std::size_t j = 0; j + 1 < t.points.size(); ++j)
            links.insert({t.points[j].frame, t.points[j].point_index,
                          t.points[j + 1].point_index});
    return links;
}

Outcome criterion8() {
    long shared = 0, total = 0;
    double min_ratio = 1.0;
    for (int s = 0; s < kChunkSequences; ++s) {
        MotionSpec ms;
        ms.scenario = MotionModel::Vesicle;
        ms.density = 100;
        ms.frames = 20;
        ms.rng_seed = derive_seed(4242, static_cast<std::uint64_t>(s));
        const std::vector<TimedTrack> truth = simulate_tracks(ms, 512, 512);
        PointCloudSequence seq;
        seq.domain_area = 512.0 * 512.0;
        seq.frames.resize(20);
        for (const TimedTrack& t : truth)
            for (int j = 0; j < t.length(); ++j)
                seq.frames[static_cast<std::size_t>(t.start_frame + j)].push_back(
                    t.positions[static_cast<std::size_t>(j)]);
        LinkerConfig plain;
        const std::set<LinkKey> lp = track_links(extract_tracks(seq, plain));
        LinkerConfig chunked;
        chunked.chunk_size = 8;
        chunked.overlap = 3;
        const std::set<LinkKey> lc = track_links(extract_tracks_chunked(seq, chunked));
        long seq_shared = 0;
        for (const LinkKey& k : lp)
            if (lc.count(k)) ++seq_shared;
        shared += seq_shared;
        total += static_cast<long>(lp.size());
        if (!lp.empty())
            min_ratio = std::min(min_ratio, static_cast<double>(seq_shared) /
                                                static_cast<double>(lp.size()));
    }
    const double ratio = static_cast<double>(shared) / static_cast<double>(total);
    Outcome o;
    o.pass = ratio >= kChunkAgreementMin;
    o.detail = strf("chunked run kept %.4f of single-pass point assignments (bound %.2f; "
                    "worst sequence %.4f; %ld/%ld links over %d low-density sequences)",
                    ratio, kChunkAgreementMin, min_ratio, shared, total, kChunkSequences);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 9: metric oracles — exact pairing, closed-form scores, and the
// NFA threshold identity.

double brute_pairing_cost(const std::vector<TimedTrack>& truth,
                          const std::vector<TimedTrack>& est, double gate, int frames,
                          std::size_t xi, unsigned used) {
    if (xi == truth.size()) return 0.0;
    double best = dummy_distance(truth[xi], gate, frames) +
                  brute_pairing_cost(truth, est, gate, frames, xi + 1, used);
    for (std::size_t yi = 0; yi < est.size(); ++yi) {
        if (used & (1u << yi)) continue;
        const double c = track_distance(truth[xi], est[yi], gate, frames) +
                         brute_pairing_cost(truth, est, gate, frames, xi + 1,
                                            used | (1u << yi));
        best = std::min(best, c);
    }
    return best;
}

TimedTrack random_track(Rng& rng, double span) {
    TimedTrack t;
    t.start_frame = static_cast<int>(rng.uniform() * 4.0);
    const int len = 1 + static_cast<int>(rng.uniform() * 4.0);
    for (int i = 0; i < len; ++i) t.positions.push_back({rng.uniform(0.0, span), rng.uniform(0.0, span)});
    return t;
}

TimedTrack line_track(int start, int length, double x0, double y0, double vx = 0.0,
                      double vy = 0.0) {
    TimedTrack t;
    t.start_frame = start;
    for (int i = 0; i < length; ++i) t.positions.push_back({x0 + vx * i, y0 + vy * i});
    return t;
}

Outcome criterion9() {
    std::string detail;
    bool pass = true;

    // (a) exact assignment vs exhaustive enumeration.
    int pairing_bad = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Rng rng(derive_seed(9090, static_cast<std::uint64_t>(trial)));
        std::vector<TimedTrack> truth, est;
        const int nx = 1 + static_cast<int>(rng.uniform() * 6.0);  // 1..6
        const int ny = static_cast<int>(rng.uniform() * 7.0);      // 0..6
        for (int i = 0; i < nx; ++i) truth.push_back(random_track(rng, 40.0));
        for (int i = 0; i < ny; ++i) est.push_back(random_track(rng, 40.0));
        const TrackPairing p = pair_tracks(truth, est, 5.0, 8);
        const double brute = brute_pairing_cost(truth, est, 5.0, 8, 0, 0u);
        if (std::abs(p.total_distance - brute) > kMetricTol * std::max(1.0, brute))
            ++pairing_bad;
    }
    if (pairing_bad) pass = false;
    detail += strf("pairing vs exhaustive: %d/60 mismatches", pairing_bad);

    // (b) closed-form score examples.
    int closed_bad = 0;
    auto expect = [&](double got, double want) {
        if (std::abs(got - want) > kMetricTol) ++closed_bad;
    };
    const std::vector<TimedTrack> x{line_track(0, 10, 50.0, 50.0, 2.0, 1.0)};
    {
        TrackScore s = score_tracks(x, x, 5.0, 10);
        expect(s.alpha, 1.0);
        expect(s.beta, 1.0);
        expect(s.jsc, 1.0);
        expect(s.jsc_theta, 1.0);
        expect(s.rmse, 0.0);
    }
    {
        std::vector<TimedTrack> y = x;
        y.push_back(line_track(0, 10, 400.0, 400.0));
        TrackScore s = score_tracks(x, y, 5.0, 10);
        expect(s.alpha, 1.0);
        expect(s.beta, 0.5);
        expect(s.jsc, 0.5);
        expect(s.jsc_theta, 0.5);
        expect(s.rmse, 0.0);
    }
    {
        const std::vector<TimedTrack> y{line_track(0, 10, 53.0, 50.0, 2.0, 1.0)};
        TrackScore s = score_tracks(x, y, 5.0, 10);
        expect(s.alpha, 0.4);
        expect(s.beta, 0.4);
        expect(s.jsc, 1.0);
        expect(s.jsc_theta, 1.0);
        expect(s.rmse, 3.0);
    }
    if (closed_bad) pass = false;
    detail += strf("; closed forms: %d deviations > %.0e", closed_bad, kMetricTol);

    // (c) the threshold identity and the decision boundary of the NFA test.
    int identity_bad = 0, bracket_bad = 0, bracket_checked = 0;
    const double grid = 512.0 * 512.0;
    for (double eps : {0.01, 0.1, 1.0, 10.0}) {
        for (double radius : {1.0, 2.0, 3.0, 5.0}) {
            for (double alpha : {1.25, 2.0, 3.5}) {
                DetectionModel model;
                model.epsilon = eps;
                model.grid_size = static_cast<long long>(grid);
                const double zs = z_threshold(model);
                const double direct = contrast_threshold(eps, grid, radius, alpha);
                const double via_z = zs * continuous_norm_diff(radius, alpha);
                if (std::abs(direct - via_z) > kMetricTol * direct) ++identity_bad;
                try {
                    model.kernels = build_kernels(radius, alpha);
                } catch (const InvalidGeometryError&) {
                    continue;  // ring too thin to hold any pixel at this geometry
                }
                ++bracket_checked;
                const double nd = model.kernels.norm_diff;
                if (nfa_at(model, zs * (1 + 1e-6) * nd, 0.0, 1.0) > eps) ++bracket_bad;
                if (nfa_at(model, zs * (1 - 1e-6) * nd, 0.0, 1.0) <= eps) ++bracket_bad;
            }
        }
    }
    if (identity_bad || bracket_bad) pass = false;
    detail += strf("; threshold identity: %d/48 deviations, decision boundary: %d/%d "
                   "bracket failures",
                   identity_bad, bracket_bad, bracket_checked);

    Outcome o;
    o.pass = pass;
    o.detail = detail;
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 10: full pipeline trend over SNR for both motion scenarios.

struct PipelineScores {
    double alpha = 0.0, beta = 0.0, jsc = 0.0;
    bool ok = false;
    std::string error;
};

PipelineScores run_pipeline(const fs::path& dir, const std::string& scenario, int snr,
                            std::uint64_t seed) {
    PipelineScores ps;
    auto run = [&](std::vector<std::string> args, const char* stage) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        if (code != 0 && ps.error.empty())
            ps.error = strf("%s exited %d: %s", stage, code, err.str().c_str());
        return code == 0;
    };
    const std::string d = dir.string();
    if (!run({"simulate", "--preset", scenario + "-low-snr" + std::to_string(snr), "--seed",
              std::to_string(seed), "--out", d},
             "simulate"))
        return ps;
    std::vector<std::string> det{"detect"};
    for (int k = 0; k < 20; ++k) det.push_back(strf("%s/frame_%04d.pgm", d.c_str(), k));
    det.insert(det.end(), {"--out", d + "/detections.csv"});
    if (!run(det, "detect")) return ps;
    if (!run({"link", d + "/detections.csv", "--out", d + "/tracks.csv", "--width", "512",
              "--height", "512", "--frames", "20", "--chunk", "8", "--overlap", "3"},
             "link"))
        return ps;
    if (!run({"evaluate", "--mode", "tracking", "--truth", d + "/truth_tracks.csv",
              "--estimate", d + "/tracks.csv", "--frames", "20", "--out", d + "/scores.csv"},
             "evaluate"))
        return ps;
    std::map<std::string, double> scores;
    for (const auto& [name, value] : io::read_scores_csv(d + "/scores.csv"))
        scores[name] = value;
    ps.alpha = scores["alpha"];
    ps.beta = scores["beta"];
    ps.jsc = scores["jsc"];
    ps.ok = true;
    return ps;
}

Outcome criterion10() {
    Timer timer;
    TempDir tmp("actrack_acceptance_e2e");
    Outcome o;
    o.pass = true;
    std::string detail;
    for (const std::string scenario : {"vesicle", "receptor"}) {
        PipelineScores low[2];
        const int snrs[2] = {2, 4};
        for (int i = 0; i < 2; ++i) {
            const fs::path dir = tmp.path / (scenario + std::to_string(snrs[i]));
            low[i] = run_pipeline(dir, scenario, snrs[i], 20250810 + static_cast<unsigned>(i));
            if (!low[i].ok) {
                o.pass = false;
                o.detail = scenario + " pipeline failed: " + low[i].error;
                return o;
            }
        }
        const bool trend = low[1].alpha > low[0].alpha && low[1].beta > low[0].beta &&
                           low[1].jsc > low[0].jsc;
        const bool floor = low[1].jsc >= kJscMin;
        if (!trend || !floor) o.pass = false;
        detail += strf("%s%s alpha %.3f->%.3f beta %.3f->%.3f jsc %.3f->%.3f%s%s",
                       detail.empty() ? "" : " | ", scenario.c_str(), low[0].alpha,
                       low[1].alpha, low[0].beta, low[1].beta, low[0].jsc, low[1].jsc,
                       trend ? "" : " (no trend!)", floor ? "" : " (jsc floor!)");
    }
    const double elapsed = timer.secs();
    if (elapsed >= kPipelineTimeMax) o.pass = false;
    o.detail = detail + strf("; SNR 2 -> 4 must improve alpha/beta/jsc, jsc@4 >= %.1f; "
                             "%.0fs (bound %.0fs)",
                             kJscMin, elapsed, kPipelineTimeMax);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    Outcome (*criteria[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                               criterion6, criterion7, criterion8, criterion9, criterion10};
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
            if (only < 1 || only > 10) {
                std::cerr << "error: --criterion expects a number in [1, 10]\n";
                return 2;
            }
        } else {
            std::cerr << "usage: acceptance_tests [--criterion N]\n";
            return 2;
        }
    }
    bool all_pass = true;
    for (int n = 1; n <= 10; ++n) {
        if (only != 0 && n != only) continue;
        const Outcome o = criteria[n - 1]();
        std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " — "
                  << o.detail << std::endl;
        if (!o.pass) all_pass = false;
    }
    return all_pass ? 0 : 1;
}
