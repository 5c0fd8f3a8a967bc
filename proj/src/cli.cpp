#include "actrack/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "actrack/detect.hpp"
#include "actrack/errors.hpp"
#include "actrack/eval.hpp"
#include "actrack/image.hpp"
#include "actrack/io.hpp"
#include "actrack/link.hpp"
#include "actrack/synth.hpp"

namespace actrack::cli {

namespace {

namespace fs = std::filesystem;

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::size_t end = comma == std::string::npos ? text.size() : comma;
        std::string field = text.substr(start, end - start);
        double v = 0.0;
        const char* first = field.data();
        const char* last = first + field.size();
        auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last)
            throw InvalidConfigError(std::string(flag) + ": invalid number '" + field + "'");
        values.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (values.empty()) throw InvalidConfigError(std::string(flag) + ": empty list");
    return values;
}

std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%04d.pgm", index);
    return buf;
}

void print_metrics(std::ostream& out, const std::vector<std::pair<std::string, double>>& metrics) {
    for (const auto& [name, value] : metrics)
        out << name << " = " << io::format_double(value) << '\n';
}

// ---------------------------------------------------------------------------
// simulate

// Spot-image style per scene preset family: background model and PSF spread.
struct SceneStyle {
    Background background;
    double sigma_s = 2.1;
    const char* kind = "uniform";
};

SceneStyle scene_style(char type) {
    switch (type) {
        case 'B': return {Background::gradient(500.0, 3500.0, 30.0), 1.4, "gradient"};
        case 'C': return {Background::nonuniform(1000.0, 4000.0, 40.0), 1.7, "nonuniform"};
        default: return {Background::uniform(2000.0), 2.1, "uniform"};
    }
}

struct PresetInfo {
    bool motion = false;
    char type = 'A';         // spot presets
    std::string scenario;    // motion presets: vesicle | receptor
    int density = 100;
    double snr = 4.0;
};

bool parse_snr_suffix(const std::string& name, std::size_t pos, double& snr) {
    if (name.compare(pos, 3, "snr") != 0) return false;
    const char* first = name.data() + pos + 3;
    const char* last = name.data() + name.size();
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || v <= 0.0) return false;
    snr = v;
    return true;
}

std::optional<PresetInfo> parse_preset(const std::string& name) {
    PresetInfo info;
    if (name.rfind("type", 0) == 0 && name.size() > 6 && name[5] == '-') {
        char type = name[4];
        if ((type == 'A' || type == 'B' || type == 'C') && parse_snr_suffix(name, 6, info.snr)) {
            info.type = type;
            return info;
        }
        return std::nullopt;
    }
    for (const char* scenario : {"vesicle", "receptor"}) {
        std::string prefix = std::string(scenario) + "-";
        if (name.rfind(prefix, 0) != 0) continue;
        std::string rest = name.substr(prefix.size());
        const std::pair<const char*, int> levels[] = {{"low-", 100}, {"mid-", 500}, {"high-", 1000}};
        for (const auto& [level, density] : levels) {
            if (rest.rfind(level, 0) != 0) continue;
            if (!parse_snr_suffix(rest, std::string(level).size(), info.snr)) return std::nullopt;
            info.motion = true;
            info.scenario = scenario;
            info.density = density;
            return info;
        }
        return std::nullopt;
    }
    return std::nullopt;
}

struct SimulateFlags {
    std::string preset;
    std::string scenario;
    std::string background;
    std::string out_dir;
    int width = 0, height = 0, frames = 0, spots = 0, density = 0;
    double grid_pitch = 16.0, jitter = 3.0;
    double snr = 4.0, noise_sigma = 100.0, sigma_s = 0.0;
    double bg_level = 0.0, bg_low = 0.0, bg_high = 0.0, bg_direction = 0.0;
    double bg_min = 0.0, bg_max = 0.0, bg_blur = 40.0;
    double step_std = 1.5, speed = 3.0;
    double p_to_directed = 0.0, p_to_brownian = 0.0, p_start_directed = 0.0;
    double appear_rate = 0.0, disappear_prob = 0.0;
    std::uint64_t seed = 1;
};

int cmd_simulate(CLI::App* sub, const SimulateFlags& f, std::ostream& out) {
    auto given = [&](const char* name) { return sub->count(name) > 0; };

    std::optional<PresetInfo> preset;
    if (!f.preset.empty()) {
        preset = parse_preset(f.preset);
        if (!preset)
            throw InvalidConfigError(
                "unknown preset '" + f.preset +
                "'; expected type{A|B|C}-snr<k> or {vesicle|receptor}-{low|mid|high}-snr<k>");
    }

    std::string scenario = given("--scenario")
                               ? f.scenario
                               : (preset && preset->motion ? preset->scenario : "spots");
    const bool motion = scenario != "spots";

    // Mode defaults, refined by the preset, overridden by explicit flags.
    int width = motion ? 512 : 256;
    int height = width;
    int frames = motion ? 20 : 16;
    int spots = 256, density = 100;
    double pitch = 16.0, jitter = 3.0;
    double snr = 4.0, noise_sigma = 100.0;
    double sigma_s = motion ? 2.0 : 2.1;
    Background bg = Background::uniform(motion ? 1000.0 : 2000.0);
    std::string bg_kind = "uniform";
    double step_std = 1.5, speed = 3.0;
    double p2d = 0.0, p2b = 0.0, psd = 0.0;
    double appear = 0.0, disappear = 0.0;
    if (scenario == "receptor") {
        p2d = 0.2;
        p2b = 0.2;
        psd = 0.5;
    }

    if (preset) {
        snr = preset->snr;
        if (preset->motion) {
            density = preset->density;
        } else {
            SceneStyle style = scene_style(preset->type);
            bg = style.background;
            bg_kind = style.kind;
            sigma_s = style.sigma_s;
        }
    }

    if (given("--width")) width = f.width;
    if (given("--height")) height = f.height;
    if (given("--frames")) frames = f.frames;
    if (given("--spots")) spots = f.spots;
    if (given("--grid-pitch")) pitch = f.grid_pitch;
    if (given("--jitter")) jitter = f.jitter;
    if (given("--density")) density = f.density;
    if (given("--snr")) snr = f.snr;
    if (given("--noise-sigma")) noise_sigma = f.noise_sigma;
    if (given("--sigma-s")) sigma_s = f.sigma_s;
    if (given("--step-std")) step_std = f.step_std;
    if (given("--speed")) speed = f.speed;
    if (given("--p-to-directed")) p2d = f.p_to_directed;
    if (given("--p-to-brownian")) p2b = f.p_to_brownian;
    if (given("--p-start-directed")) psd = f.p_start_directed;
    if (given("--appear-rate")) appear = f.appear_rate;
    if (given("--disappear-prob")) disappear = f.disappear_prob;

    const bool bg_flag = given("--background") || given("--bg-level") || given("--bg-low") ||
                         given("--bg-high") || given("--bg-direction") || given("--bg-min") ||
                         given("--bg-max") || given("--bg-blur");
    if (bg_flag) {
        if (given("--background")) bg_kind = f.background;
        if (bg_kind == "uniform") {
            double level = given("--bg-level")
                               ? f.bg_level
                               : (bg.kind == Background::Kind::Uniform ? bg.level
                                                                       : (motion ? 1000.0 : 2000.0));
            bg = Background::uniform(level);
        } else if (bg_kind == "gradient") {
            double low = 500.0, high = 3500.0, direction = 30.0;
            if (bg.kind == Background::Kind::Gradient) {
                low = bg.low;
                high = bg.high;
                direction = bg.direction_deg;
            }
            if (given("--bg-low")) low = f.bg_low;
            if (given("--bg-high")) high = f.bg_high;
            if (given("--bg-direction")) direction = f.bg_direction;
            bg = Background::gradient(low, high, direction);
        } else {
            double lo = 1000.0, hi = 4000.0, blur = 40.0;
            if (bg.kind == Background::Kind::Nonuniform) {
                lo = bg.min_level;
                hi = bg.max_level;
                blur = bg.blur_sigma;
            }
            if (given("--bg-min")) lo = f.bg_min;
            if (given("--bg-max")) hi = f.bg_max;
            if (given("--bg-blur")) blur = f.bg_blur;
            bg = Background::nonuniform(lo, hi, blur);
        }
    }

    if (frames < 3) throw InvalidConfigError("frames must be at least 3");
    if (width < 1 || height < 1) throw InvalidConfigError("image dimensions must be positive");

    try {
        fs::create_directories(f.out_dir);
    } catch (const fs::filesystem_error& e) {
        throw DataError("cannot create output directory '" + f.out_dir + "': " + e.what());
    }
    fs::path dir(f.out_dir);

    std::vector<std::pair<std::string, std::string>> manifest;
    auto put = [&](const std::string& key, const std::string& value) {
        manifest.emplace_back(key, value);
    };
    auto put_num = [&](const std::string& key, double value) { put(key, io::format_double(value)); };
    put("command", "simulate");
    put("scene-preset", f.preset.empty() ? "custom" : f.preset);
    put("scenario", scenario);
    put_num("width", width);
    put_num("height", height);
    put_num("frames", frames);
    if (!motion) {
        put_num("spots", spots);
        put_num("grid-pitch", pitch);
        put_num("jitter", jitter);
    } else {
        put_num("density", density);
        put_num("step-std", step_std);
        put_num("speed", speed);
        put_num("p-to-directed", p2d);
        put_num("p-to-brownian", p2b);
        put_num("p-start-directed", psd);
        put_num("appear-rate", appear);
        put_num("disappear-prob", disappear);
    }
    put_num("snr", snr);
    put_num("noise-sigma", noise_sigma);
    put_num("sigma-s", sigma_s);
    put("background", bg_kind);
    if (bg.kind == Background::Kind::Uniform) {
        put_num("bg-level", bg.level);
    } else if (bg.kind == Background::Kind::Gradient) {
        put_num("bg-low", bg.low);
        put_num("bg-high", bg.high);
        put_num("bg-direction", bg.direction_deg);
    } else {
        put_num("bg-min", bg.min_level);
        put_num("bg-max", bg.max_level);
        put_num("bg-blur", bg.blur_sigma);
    }
    put("seed", std::to_string(f.seed));
    put("frame-pattern", "frame_%04d.pgm");
    put("truth-detections", "truth_detections.csv");

    std::vector<io::DetectionRow> truth_rows;
    auto add_truth = [&](int frame, double x, double y) {
        io::DetectionRow row;
        row.frame = frame;
        row.x = x;
        row.y = y;
        truth_rows.push_back(row);
    };

    if (!motion) {
        const int cols = static_cast<int>(std::floor(width / pitch));
        const int rows_avail = static_cast<int>(std::floor(height / pitch));
        if (pitch <= 0.0 || cols < 1 || rows_avail < 1)
            throw InvalidConfigError("grid-pitch must be positive and fit inside the image");
        if (jitter < 0.0) throw InvalidConfigError("jitter must be non-negative");
        if (spots < 1 || spots > cols * rows_avail)
            throw InvalidConfigError("spots must lie in [1, " + std::to_string(cols * rows_avail) +
                                     "] for this image size and grid pitch");
        const double amplitude = snr_to_amplitude(snr, noise_sigma);
        for (int k = 0; k < frames; ++k) {
            // One independent layout per image: cell-center grid, jittered
            // uniformly per axis (x before y, row-major spot order).
            Rng jit(derive_seed(f.seed, 3000 + static_cast<std::uint64_t>(k)));
            SceneSpec spec;
            spec.width = width;
            spec.height = height;
            spec.background = bg;
            spec.noise_sigma = noise_sigma;
            spec.rng_seed = derive_seed(f.seed, static_cast<std::uint64_t>(k));
            spec.spots.reserve(static_cast<std::size_t>(spots));
            for (int i = 0; i < spots; ++i) {
                const int gx = i % cols;
                const int gy = i / cols;
                Spot s;
                s.x = pitch / 2.0 + gx * pitch + jit.uniform(-jitter, jitter);
                s.y = pitch / 2.0 + gy * pitch + jit.uniform(-jitter, jitter);
                s.sigma_s = sigma_s;
                s.amplitude = amplitude;
                spec.spots.push_back(s);
                add_truth(k, s.x, s.y);
            }
            RenderedFrame rendered = render_frame(spec);
            write_pgm((dir / frame_filename(k)).string(), rendered.image);
        }
    } else {
        MotionSpec ms;
        ms.scenario = scenario == "receptor" ? MotionModel::Receptor : MotionModel::Vesicle;
        ms.density = density;
        ms.frames = frames;
        ms.step_std = step_std;
        ms.speed = speed;
        ms.p_to_directed = p2d;
        ms.p_to_brownian = p2b;
        ms.p_start_directed = psd;
        ms.appear_rate = appear;
        ms.disappear_prob = disappear;
        ms.rng_seed = f.seed;
        SequenceScene scene;
        scene.width = width;
        scene.height = height;
        scene.background = bg;
        scene.noise_sigma = noise_sigma;
        scene.sigma_s = sigma_s;
        scene.snr = snr;
        SimulatedSequence sim = simulate_sequence(ms, scene);
        for (int k = 0; k < frames; ++k)
            write_pgm((dir / frame_filename(k)).string(), sim.frames[static_cast<std::size_t>(k)]);
        io::write_tracks_csv((dir / "truth_tracks.csv").string(), sim.truth);
        put("truth-tracks", "truth_tracks.csv");
        for (const TimedTrack& t : sim.truth)
            for (std::size_t i = 0; i < t.positions.size(); ++i)
                add_truth(t.start_frame + static_cast<int>(i), t.positions[i].x, t.positions[i].y);
    }

    std::sort(truth_rows.begin(), truth_rows.end(),
              [](const io::DetectionRow& a, const io::DetectionRow& b) {
                  return std::tie(a.frame, a.y, a.x) < std::tie(b.frame, b.y, b.x);
              });
    io::write_detections_csv((dir / "truth_detections.csv").string(), truth_rows);
    io::write_manifest((dir / "manifest.txt").string(), manifest);

    out << "wrote " << frames << " " << width << "x" << height << " frames, "
        << (motion ? "track + detection" : "detection") << " ground truth, and manifest.txt to "
        << f.out_dir << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// detect / froc shared pieces

struct DetectorFlags {
    std::string preset;
    std::string radii = "2,3";
    std::string sigma_mode = "global";
    double alpha = 2.0, epsilon = 1.0, sigma = 0.0, subpixel_radius = 6.0;
    int passes = 2;
    long long grid = 0;
    int workers = 1;
};

void attach_detector_flags(CLI::App* sub, DetectorFlags& f) {
    sub->add_option("--preset", f.preset, "Particle family preset: typeA, typeB or typeC")
        ->check(CLI::IsMember({"typeA", "typeB", "typeC"}));
    sub->add_option("--radii", f.radii, "Comma-separated ascending inner radii (default 2,3)");
    sub->add_option("--alpha", f.alpha, "Ring outer/inner radius ratio (default 2)");
    sub->add_option("--epsilon", f.epsilon, "Expected false detections per image (default 1)");
    sub->add_option("--sigma-mode", f.sigma_mode, "Noise scale: global or local (default global)")
        ->check(CLI::IsMember({"global", "local"}));
    sub->add_option("--sigma", f.sigma, "Fixed noise std; 0 estimates it from each image");
    sub->add_option("--passes", f.passes, "Detection sweeps with occlusion between them (default 2)");
    sub->add_option("--grid", f.grid, "Test count the significance is normalized by; 0 = testable pixels");
    sub->add_option("--subpixel-radius", f.subpixel_radius, "Centroid refinement disc radius (default 6)");
    sub->add_option("--workers", f.workers, "Worker threads across frames (default 1)");
}

DetectorConfig resolve_detector(CLI::App* sub, const DetectorFlags& f) {
    DetectorConfig cfg;
    if (!f.preset.empty()) {
        if (f.preset == "typeA") {
            cfg.radii = {3.0};
            cfg.alpha = 2.0;
            cfg.epsilon = 0.3;
        } else if (f.preset == "typeB") {
            cfg.radii = {2.0};
            cfg.alpha = 3.5;
            cfg.epsilon = 0.3;
        } else {
            cfg.radii = {3.0};
            cfg.alpha = 1.25;
            cfg.epsilon = 0.1;
        }
    }
    if (sub->count("--radii")) cfg.radii = parse_double_list(f.radii, "--radii");
    if (sub->count("--alpha")) cfg.alpha = f.alpha;
    if (sub->count("--epsilon")) cfg.epsilon = f.epsilon;
    cfg.sigma_mode = f.sigma_mode == "local" ? SigmaMode::Local : SigmaMode::Global;
    cfg.sigma = f.sigma;
    cfg.hiding_passes = f.passes;
    cfg.subpixel_radius = f.subpixel_radius;
    cfg.grid_size = f.grid;
    if (cfg.radii.empty() || !std::is_sorted(cfg.radii.begin(), cfg.radii.end()))
        throw InvalidConfigError("--radii must be a non-empty ascending list");
    if (cfg.hiding_passes < 1) throw InvalidConfigError("--passes must be at least 1");
    return cfg;
}

int clamp_workers(int workers) { return std::clamp(workers, 1, 256); }

// Runs the detector over preloaded frames; results keep frame order
// regardless of the worker count. The first worker exception is rethrown.
std::vector<std::vector<Detection>> detect_frames(const std::vector<Image>& frames,
                                                  const DetectorConfig& cfg, int workers) {
    std::vector<std::vector<Detection>> per_frame(frames.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        std::size_t i = 0;
        while ((i = next.fetch_add(1)) < frames.size()) {
            try {
                per_frame[i] = detect_multiscale(frames[i], cfg);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int n = std::min<int>(clamp_workers(workers), std::max<std::size_t>(frames.size(), 1));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return per_frame;
}

struct DetectFlags {
    std::vector<std::string> images;
    std::string out_path = "detections.csv";
    DetectorFlags detector;
};

int cmd_detect(CLI::App* sub, const DetectFlags& f, std::ostream& out, std::ostream& err) {
    DetectorConfig cfg = resolve_detector(sub, f.detector);
    const std::size_t n = f.images.size();

    std::vector<std::vector<Detection>> per_frame(n);
    std::vector<std::pair<std::size_t, std::string>> failures;
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    auto work = [&] {
        std::size_t i = 0;
        while ((i = next.fetch_add(1)) < n) {
            try {
                Image img = read_pgm(f.images[i]);
                per_frame[i] = detect_multiscale(img, cfg);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failures.emplace_back(i, e.what());
            }
        }
    };
    const int workers = std::min<int>(clamp_workers(f.detector.workers), std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();

    std::vector<io::DetectionRow> rows = io::detection_rows(per_frame);
    io::write_detections_csv(f.out_path, rows);
    out << rows.size() << " detections across " << n << " frames -> " << f.out_path << '\n';

    std::sort(failures.begin(), failures.end());
    for (const auto& [index, message] : failures)
        err << "error: " << f.images[index] << ": " << message << '\n';
    return failures.empty() ? 0 : 2;
}

// ---------------------------------------------------------------------------
// link

struct LinkFlags {
    std::string input;
    std::string out_path = "tracks.csv";
    double epsilon = 1.0;
    int min_length = 3;
    int chunk = 0;
    int overlap = 3;
    double delta_max = 0.0;
    int width = 0, height = 0, frames = 0;
};

int cmd_link(const LinkFlags& f, std::ostream& out) {
    if (f.width < 1 || f.height < 1)
        throw InvalidConfigError("--width and --height must be positive (the linker needs the domain area)");
    if (f.delta_max < 0.0) throw InvalidConfigError("--delta-max must be non-negative (0 = automatic)");
    if (f.frames < 0) throw InvalidConfigError("--frames must be non-negative");

    auto rows = io::read_detections_csv(f.input);
    PointCloudSequence seq = io::to_point_clouds(
        rows, static_cast<double>(f.width) * static_cast<double>(f.height), f.frames);

    LinkerConfig cfg;
    cfg.epsilon = f.epsilon;
    cfg.min_length = f.min_length;
    cfg.chunk_size = f.chunk;
    cfg.overlap = f.overlap;
    if (f.delta_max > 0.0) cfg.delta_max = f.delta_max;

    std::vector<Track> tracks =
        cfg.chunk_size > 0 ? extract_tracks_chunked(seq, cfg) : extract_tracks(seq, cfg);
    io::write_tracks_csv(f.out_path, io::to_timed_tracks(tracks));
    out << tracks.size() << " tracks from " << rows.size() << " detections -> " << f.out_path
        << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateFlags {
    std::string mode;
    std::string truth;
    std::string estimate;
    std::string out_path;
    double tolerance = 4.0;
    double eps_gate = 5.0;
    double match_tolerance = 0.0;
    int frames = 0;
};

// Detection rows grouped into per-frame centers over frames 0..frame_count-1.
std::vector<std::vector<Point2>> rows_by_frame(const std::vector<io::DetectionRow>& rows,
                                               int frame_count) {
    std::vector<std::vector<Point2>> frames(static_cast<std::size_t>(frame_count));
    for (const io::DetectionRow& r : rows)
        frames[static_cast<std::size_t>(r.frame)].push_back(Point2{r.x, r.y});
    return frames;
}

int max_frame(const std::vector<io::DetectionRow>& rows) {
    int m = -1;
    for (const io::DetectionRow& r : rows) m = std::max(m, r.frame);
    return m;
}

std::vector<std::pair<std::string, double>> aggregate_detection_scores(
    const std::vector<std::vector<Point2>>& truth, const std::vector<std::vector<Point2>>& est,
    double tolerance, double* tpr_out = nullptr, double* fpr_out = nullptr) {
    long long ntp = 0, nfp = 0, nfn = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        DetectionScore s = score_detections(truth[k], est[k], tolerance);
        ntp += s.ntp;
        nfp += s.nfp;
        nfn += s.nfn;
    }
    const long long total = ntp + nfn;
    const double tpr = total > 0 ? static_cast<double>(ntp) / static_cast<double>(total) : 1.0;
    const double fpr = total > 0 ? static_cast<double>(nfp) / static_cast<double>(total)
                                 : (nfp > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (tpr_out) *tpr_out = tpr;
    if (fpr_out) *fpr_out = fpr;
    return {{"ntp", static_cast<double>(ntp)},
            {"nfp", static_cast<double>(nfp)},
            {"nfn", static_cast<double>(nfn)},
            {"tpr", tpr},
            {"fpr_star", fpr},
            {"tolerance", tolerance}};
}

int cmd_evaluate(const EvaluateFlags& f, std::ostream& out) {
    std::vector<std::pair<std::string, double>> metrics;
    if (f.mode == "detection") {
        auto truth_rows = io::read_detections_csv(f.truth);
        auto est_rows = io::read_detections_csv(f.estimate);
        const int tmax = max_frame(truth_rows);
        const int emax = max_frame(est_rows);
        if (emax > tmax)
            throw DataError("frame-range mismatch: estimate '" + f.estimate +
                            "' refers to frame " + std::to_string(emax) + " but truth '" +
                            f.truth + "' ends at frame " + std::to_string(tmax));
        auto truth = rows_by_frame(truth_rows, tmax + 1);
        auto est = rows_by_frame(est_rows, tmax + 1);
        metrics = aggregate_detection_scores(truth, est, f.tolerance);
        metrics.emplace_back("frames", tmax + 1);
    } else {
        auto truth = io::read_tracks_csv(f.truth);
        auto est = io::read_tracks_csv(f.estimate);
        int data_end = -1;
        for (const TimedTrack& t : truth) data_end = std::max(data_end, t.last_frame());
        for (const TimedTrack& t : est) data_end = std::max(data_end, t.last_frame());
        int frames = data_end + 1;
        if (f.frames > 0) {
            if (data_end >= f.frames)
                throw DataError("frame-range mismatch: track data extends to frame " +
                                std::to_string(data_end) + " beyond the declared --frames " +
                                std::to_string(f.frames));
            frames = f.frames;
        }
        TrackScore s = score_tracks(truth, est, f.eps_gate, frames, f.match_tolerance);
        int paired = 0;
        for (int e : s.pairing.truth_to_estimate)
            if (e >= 0) ++paired;
        metrics = {{"alpha", s.alpha},
                   {"beta", s.beta},
                   {"jsc", s.jsc},
                   {"jsc_theta", s.jsc_theta},
                   {"rmse", s.rmse},
                   {"paired", static_cast<double>(paired)},
                   {"truth_tracks", static_cast<double>(truth.size())},
                   {"estimate_tracks", static_cast<double>(est.size())},
                   {"frames", static_cast<double>(frames)},
                   {"eps_gate", f.eps_gate}};
    }
    print_metrics(out, metrics);
    if (!f.out_path.empty()) io::write_scores_csv(f.out_path, metrics);
    return 0;
}

// ---------------------------------------------------------------------------
// froc

struct FrocFlags {
    std::vector<std::string> images;
    std::string truth;
    std::string out_path = "froc.csv";
    std::string svg_path;
    std::string scores_path;
    std::string epsilons = "0.1,0.2,0.5,1,2,5,10";
    double tolerance = 4.0;
    double target_fpr = 0.01;
    DetectorFlags detector;
};

int cmd_froc(CLI::App* sub, const FrocFlags& f, std::ostream& out) {
    DetectorConfig cfg = resolve_detector(sub, f.detector);
    std::vector<double> epsilons = parse_double_list(f.epsilons, "--epsilons");
    std::sort(epsilons.begin(), epsilons.end());
    if (f.images.empty()) throw InvalidConfigError("at least one image is required");

    auto truth_rows = io::read_detections_csv(f.truth);
    const int n = static_cast<int>(f.images.size());
    if (max_frame(truth_rows) >= n)
        throw DataError("frame-range mismatch: truth '" + f.truth + "' refers to frame " +
                        std::to_string(max_frame(truth_rows)) + " but only " + std::to_string(n) +
                        " images were given");
    auto truth = rows_by_frame(truth_rows, n);

    std::vector<Image> frames;
    frames.reserve(f.images.size());
    for (const std::string& path : f.images) {
        try {
            frames.push_back(read_pgm(path));
        } catch (const std::exception& e) {
            throw DataError(path + ": " + e.what());
        }
    }

    std::vector<FrocPoint> ladder;
    for (double eps : epsilons) {
        DetectorConfig swept = cfg;
        swept.epsilon = eps;
        auto per_frame = detect_frames(frames, swept, f.detector.workers);
        std::vector<std::vector<Point2>> est(per_frame.size());
        for (std::size_t k = 0; k < per_frame.size(); ++k)
            for (const Detection& d : per_frame[k]) est[k].push_back(Point2{d.x_sub, d.y_sub});
        FrocPoint p;
        p.parameter = eps;
        aggregate_detection_scores(truth, est, f.tolerance, &p.tpr, &p.fpr_star);
        ladder.push_back(p);
        out << "epsilon=" << io::format_double(eps) << " tpr=" << io::format_double(p.tpr)
            << " fpr_star=" << io::format_double(p.fpr_star) << '\n';
    }

    SensitivityReport report = froc_and_sensitivity(ladder, f.target_fpr);
    io::write_froc_csv(f.out_path, report.curve);
    if (!f.svg_path.empty()) io::write_froc_svg(f.svg_path, report.curve);

    std::vector<std::pair<std::string, double>> metrics = {
        {"s_t", report.s_t},
        {"s_f", report.s_f},
        {"operating_parameter", report.operating_parameter},
        {"in_range", report.in_range ? 1.0 : 0.0},
        {"target_fpr", f.target_fpr}};
    print_metrics(out, metrics);
    if (!f.scores_path.empty()) io::write_scores_csv(f.scores_path, metrics);
    return 0;
}

// Expands `<sub> ... --config FILE ...` by splicing the file's key=value
// pairs (those matching one of the subcommand's options) in front of the
// explicit flags; combined with take-last value policy, flags override the
// file. Keys that match no option are ignored, so any stage accepts the
// manifests other stages write.
std::vector<std::string> apply_config_files(CLI::App& app, const std::vector<std::string>& args) {
    if (args.empty()) return args;
    CLI::App* sub = app.get_subcommand_no_throw(args[0]);
    if (sub == nullptr) return args;
    std::vector<std::string> files;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config" && i + 1 < args.size())
            files.push_back(args[++i]);
        else if (a.rfind("--config=", 0) == 0)
            files.push_back(a.substr(9));
    }
    if (files.empty()) return args;
    std::vector<std::string> expanded;
    expanded.push_back(args[0]);
    for (const std::string& file : files) {
        for (const auto& [key, value] : io::read_key_values(file)) {
            if (key == "config") continue;
            CLI::Option* opt = sub->get_option_no_throw("--" + key);
            if (opt == nullptr || opt->get_positional() || opt->get_expected_min() < 1) continue;
            expanded.push_back("--" + key);
            expanded.push_back(value);
        }
    }
    expanded.insert(expanded.end(), args.begin() + 1, args.end());
    return expanded;
}

void attach_config(CLI::App* sub, std::string& sink) {
    sub->add_option("--config", sink, "Read defaults from a key=value file; explicit flags override");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Particle detection and tracking pipeline with statistical false-alarm control"};
    app.name("actrack");
    app.require_subcommand(1);

    std::string config_sink;  // value is consumed by the pre-parse expansion

    SimulateFlags simf;
    auto* sim = app.add_subcommand("simulate", "Generate synthetic sequences with ground truth");
    attach_config(sim, config_sink);
    sim->add_option("--preset", simf.preset,
                    "type{A|B|C}-snr<k> spot scenes or {vesicle|receptor}-{low|mid|high}-snr<k> sequences");
    sim->add_option("--scenario", simf.scenario, "spots, vesicle or receptor")
        ->check(CLI::IsMember({"spots", "vesicle", "receptor"}));
    sim->add_option("--width", simf.width, "Image width in pixels");
    sim->add_option("--height", simf.height, "Image height in pixels");
    sim->add_option("--frames", simf.frames, "Number of frames (at least 3)");
    sim->add_option("--spots", simf.spots, "Spots per image (spot scenes)");
    sim->add_option("--grid-pitch", simf.grid_pitch, "Spot grid cell size in pixels");
    sim->add_option("--jitter", simf.jitter, "Max per-axis spot offset from its cell center");
    sim->add_option("--density", simf.density, "Particles alive at frame 0 (motion scenes)");
    sim->add_option("--snr", simf.snr, "Peak amplitude over noise std");
    sim->add_option("--noise-sigma", simf.noise_sigma, "Additive Gaussian noise std");
    sim->add_option("--sigma-s", simf.sigma_s, "PSF Gaussian std in pixels");
    sim->add_option("--background", simf.background, "uniform, gradient or nonuniform")
        ->check(CLI::IsMember({"uniform", "gradient", "nonuniform"}));
    sim->add_option("--bg-level", simf.bg_level, "Uniform background level");
    sim->add_option("--bg-low", simf.bg_low, "Gradient value at the low end");
    sim->add_option("--bg-high", simf.bg_high, "Gradient value at the high end");
    sim->add_option("--bg-direction", simf.bg_direction, "Gradient direction in degrees");
    sim->add_option("--bg-min", simf.bg_min, "Nonuniform background minimum");
    sim->add_option("--bg-max", simf.bg_max, "Nonuniform background maximum");
    sim->add_option("--bg-blur", simf.bg_blur, "Nonuniform background blur std");
    sim->add_option("--step-std", simf.step_std, "Brownian per-axis step std");
    sim->add_option("--speed", simf.speed, "Directed-state displacement per frame");
    sim->add_option("--p-to-directed", simf.p_to_directed, "P(brownian -> directed) per step");
    sim->add_option("--p-to-brownian", simf.p_to_brownian, "P(directed -> brownian) per step");
    sim->add_option("--p-start-directed", simf.p_start_directed, "P(track starts directed)");
    sim->add_option("--appear-rate", simf.appear_rate, "Expected new tracks per frame");
    sim->add_option("--disappear-prob", simf.disappear_prob, "Per-frame death probability");
    sim->add_option("--seed", simf.seed, "Base RNG seed");
    sim->add_option("--out", simf.out_dir, "Output directory")->required();

    DetectFlags detf;
    auto* det = app.add_subcommand("detect", "Detect particles in image frames");
    attach_config(det, config_sink);
    det->add_option("images", detf.images, "Input PGM frames; frame index = list position");
    det->add_option("--out", detf.out_path, "Output detections CSV (default detections.csv)");
    attach_detector_flags(det, detf.detector);

    LinkFlags linkf;
    auto* lnk = app.add_subcommand("link", "Link detections into trajectories");
    attach_config(lnk, config_sink);
    lnk->add_option("input", linkf.input, "Detections CSV")->required();
    lnk->add_option("--out", linkf.out_path, "Output tracks CSV (default tracks.csv)");
    lnk->add_option("--epsilon", linkf.epsilon, "Expected false tracks per sequence (default 1)");
    lnk->add_option("--min-length", linkf.min_length, "Minimum track length (default 3)");
    lnk->add_option("--chunk", linkf.chunk, "Chunk size in frames; 0 processes the whole sequence");
    lnk->add_option("--overlap", linkf.overlap, "Frames shared by adjacent chunks (default 3)");
    lnk->add_option("--delta-max", linkf.delta_max, "Acceleration cap; 0 = automatic");
    lnk->add_option("--width", linkf.width, "Domain width in pixels")->required();
    lnk->add_option("--height", linkf.height, "Domain height in pixels")->required();
    lnk->add_option("--frames", linkf.frames, "Frame count; 0 derives it from the data");

    EvaluateFlags evalf;
    auto* evl = app.add_subcommand("evaluate", "Score detections or tracks against ground truth");
    attach_config(evl, config_sink);
    evl->add_option("--mode", evalf.mode, "detection or tracking")
        ->check(CLI::IsMember({"detection", "tracking"}))
        ->required();
    evl->add_option("--truth", evalf.truth, "Ground-truth CSV")->required();
    evl->add_option("--estimate", evalf.estimate, "Estimated CSV")->required();
    evl->add_option("--out", evalf.out_path, "Optional score CSV output path");
    evl->add_option("--tolerance", evalf.tolerance, "Detection match tolerance in pixels (default 4)");
    evl->add_option("--eps-gate", evalf.eps_gate, "Per-frame track distance gate (default 5)");
    evl->add_option("--match-tolerance", evalf.match_tolerance,
                    "Position match tolerance inside paired tracks; 0 = the gate");
    evl->add_option("--frames", evalf.frames, "Frame count; 0 derives it from the data");

    FrocFlags frocf;
    auto* frc = app.add_subcommand("froc", "Sweep the detection threshold and report sensitivity");
    attach_config(frc, config_sink);
    frc->add_option("images", frocf.images, "Input PGM frames; frame index = list position");
    frc->add_option("--truth", frocf.truth, "Ground-truth detections CSV")->required();
    frc->add_option("--out", frocf.out_path, "FROC curve CSV (default froc.csv)");
    frc->add_option("--svg", frocf.svg_path, "Optional SVG plot of the curve");
    frc->add_option("--scores", frocf.scores_path, "Optional sensitivity score CSV");
    frc->add_option("--epsilons", frocf.epsilons, "Comma-separated threshold ladder");
    frc->add_option("--tolerance", frocf.tolerance, "Detection match tolerance in pixels (default 4)");
    frc->add_option("--target-fpr", frocf.target_fpr, "FPR* where sensitivity is measured (default 0.01)");
    attach_detector_flags(frc, frocf.detector);

    for (CLI::App* sub : {sim, det, lnk, evl, frc})
        for (CLI::Option* opt : sub->get_options())
            if (!opt->get_positional() && opt->get_expected_min() >= 1)
                opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::vector<std::string> expanded;
    try {
        expanded = apply_config_files(app, args);
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim, simf, out);
        if (det->parsed()) return cmd_detect(det, detf, out, err);
        if (lnk->parsed()) return cmd_link(linkf, out);
        if (evl->parsed()) return cmd_evaluate(evalf, out);
        if (frc->parsed()) return cmd_froc(frc, frocf, out);
        err << "error: no subcommand selected\n";
        return 1;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace actrack::cli
