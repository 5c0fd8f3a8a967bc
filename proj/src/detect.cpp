#include "actrack/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "actrack/errors.hpp"
#include "actrack/stats.hpp"

namespace actrack {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLadderStep = 0.25;
constexpr double kLadderMaxRadius = 20.0;
constexpr double kHideRadiusFactor = 2.0 / 1.45;

double clamp_step(double value, double lo, double hi) { return std::min(std::max(value, lo), hi); }

// Exclusion mask for a hiding pass: pixels closer than disc_r + R + 1 to any
// hidden disc center cannot host a new inner mask one pixel clear of the disc.
std::vector<std::uint8_t> exclusion_mask(const HiddenRegions& hidden, double model_radius) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(hidden.width()) * hidden.height(), 0);
    for (const HiddenRegions::Disc& d : hidden.discs()) {
        const double r = d.radius + model_radius + 1.0;
        const double r2 = r * r;
        const int x0 = std::max(0, static_cast<int>(std::floor(d.cx - r)));
        const int x1 = std::min(hidden.width() - 1, static_cast<int>(std::ceil(d.cx + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(d.cy - r)));
        const int y1 = std::min(hidden.height() - 1, static_cast<int>(std::ceil(d.cy + r)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - d.cx;
                const double dy = y - d.cy;
                if (dx * dx + dy * dy < r2)
                    mask[static_cast<std::size_t>(y) * hidden.width() + x] = 1;
            }
        }
    }
    return mask;
}

void refine_detection(const Image& img, Detection& det, double subpixel_radius) {
    double r = std::max(1.0, std::min(subpixel_radius, std::floor(det.scale_r)));
    const Point2 p = sub_pixel(img, det.x_pix, det.y_pix, r);
    det.x_sub = p.x;
    det.y_sub = p.y;
}

}  // namespace

double nfa_at(const DetectionModel& model, double m1, double m2, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("nfa_at: sigma must be positive");
    const double z = (m1 - m2) / (sigma * model.kernels.norm_diff);
    return static_cast<double>(model.grid_size) * normal_upper_tail(z);
}

double z_threshold(const DetectionModel& model) {
    if (model.grid_size < 1) throw std::invalid_argument("z_threshold: grid_size must be >= 1");
    const double p = model.epsilon / static_cast<double>(model.grid_size);
    if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
    if (p >= 1.0) return -std::numeric_limits<double>::infinity();
    return inverse_normal_upper_tail(p);
}

double contrast_threshold(double epsilon, double grid_size, double radius, double alpha) {
    if (!(alpha > 1.0) || !(radius > 0.0))
        throw InvalidGeometryError("contrast_threshold: need radius > 0 and alpha > 1");
    const double y = 2.0 * epsilon / grid_size;
    return inverse_erfc(y) /
           (std::sqrt(kPi / 2.0) * std::sqrt(1.0 - 1.0 / (alpha * alpha)) * radius);
}

long long resolve_grid_size(int width, int height, const MeasureKernels& kernels) {
    const long long w = width - 2LL * kernels.extent;
    const long long h = height - 2LL * kernels.extent;
    return std::max(0LL, w) * std::max(0LL, h);
}

MeaningfulMap meaningful_map(const Image& img, const DetectionModel& model,
                             const HiddenRegions* hidden, const std::vector<std::uint8_t>* skip) {
    MeaningfulMap map;
    map.width = img.width;
    map.height = img.height;
    map.marked.assign(img.size(), 0);
    map.z.assign(img.size(), std::numeric_limits<double>::quiet_NaN());
    const double zt = z_threshold(model);
    if (std::isinf(zt) && zt > 0.0) return map;
    const int e = model.kernels.extent;
    const double sigma_min = sigma_floor(intensity_range(img).span());
    for (int y = e; y < img.height - e; ++y) {
        for (int x = e; x < img.width - e; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            if (skip != nullptr && (*skip)[i]) continue;
            double z;
            try {
                const Measurement m = measure_at(img, model.kernels, x, y, hidden);
                const double sigma = model.sigma_mode == SigmaMode::Global
                                         ? model.sigma
                                         : local_sigma(img, model.kernels, x, y, hidden, sigma_min);
                if (!(sigma > 0.0)) continue;
                z = (m.m1 - m.m2) / (sigma * model.kernels.norm_diff);
            } catch (const MeasurementUnavailableError&) {
                continue;
            }
            map.z[i] = z;
            if (z >= zt) map.marked[i] = 1;
        }
    }
    return map;
}

std::vector<Component> connected_components(const MeaningfulMap& map) {
    std::vector<Component> out;
    std::vector<std::uint8_t> seen(map.marked.size(), 0);
    std::vector<std::pair<int, int>> stack;
    for (int y0 = 0; y0 < map.height; ++y0) {
        for (int x0 = 0; x0 < map.width; ++x0) {
            const std::size_t i0 = static_cast<std::size_t>(y0) * map.width + x0;
            if (!map.marked[i0] || seen[i0]) continue;
            Component c;
            c.z_max = -std::numeric_limits<double>::infinity();
            seen[i0] = 1;
            stack.assign(1, {x0, y0});
            double sx = 0.0, sy = 0.0;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                c.pixels.push_back({x, y});
                sx += x;
                sy += y;
                c.z_max = std::max(c.z_max, map.z[static_cast<std::size_t>(y) * map.width + x]);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height) continue;
                        const std::size_t ni = static_cast<std::size_t>(ny) * map.width + nx;
                        if (!map.marked[ni] || seen[ni]) continue;
                        seen[ni] = 1;
                        stack.push_back({nx, ny});
                    }
                }
            }
            c.cx = sx / static_cast<double>(c.pixels.size());
            c.cy = sy / static_cast<double>(c.pixels.size());
            out.push_back(std::move(c));
        }
    }
    return out;
}

KernelLadder::KernelLadder(double alpha, double r_max) : alpha_(alpha) {
    for (double r = 1.0; r <= r_max + 1e-9; r += kLadderStep) {
        try {
            rungs_.push_back(build_kernels(r, alpha));
        } catch (const InvalidGeometryError&) {
            // Thin rings at small fractional radii can be empty; skip the rung.
        }
    }
    if (rungs_.empty()) throw InvalidGeometryError("radius ladder is empty");
}

double ladder_r_max(int width, int height, double alpha) {
    return std::min(kLadderMaxRadius, static_cast<double>(std::min(width, height)) / (2.0 * alpha));
}

RadiusProfile r_opt_scan(const Image& img, int x, int y, const KernelLadder& ladder,
                         SigmaMode sigma_mode, double sigma, const HiddenRegions* hidden) {
    RadiusProfile profile;
    const double sigma_min = sigma_floor(intensity_range(img).span());
    double best = -std::numeric_limits<double>::infinity();
    for (const MeasureKernels& k : ladder.rungs()) {
        if (x - k.extent < 0 || x + k.extent >= img.width || y - k.extent < 0 ||
            y + k.extent >= img.height)
            break;  // rungs are sorted by radius; larger ones cannot fit either
        double score;
        try {
            const Measurement m = measure_at(img, k, x, y, hidden);
            const double s = sigma_mode == SigmaMode::Global
                                 ? std::max(sigma, sigma_min)
                                 : local_sigma(img, k, x, y, hidden, sigma_min);
            if (!(s > 0.0)) continue;
            score = (m.m1 - m.m2) / s;
        } catch (const MeasurementUnavailableError&) {
            continue;
        }
        profile.scores.push_back({k.radius, score});
        if (score > best) {
            best = score;
            profile.r_opt = k.radius;
        }
    }
    if (profile.scores.empty())
        throw MeasurementUnavailableError("no admissible radius at this center");
    profile.valid = best > 0.0;
    return profile;
}

RadiusProfile r_opt_scan(const Image& img, int x, int y, double alpha, SigmaMode sigma_mode,
                         double sigma, const HiddenRegions* hidden) {
    const KernelLadder ladder(alpha, ladder_r_max(img.width, img.height, alpha));
    return r_opt_scan(img, x, y, ladder, sigma_mode, sigma, hidden);
}

std::vector<Detection> detect_pass(const Image& img, const DetectionModel& model,
                                   const HiddenRegions* hidden, DetectionPass label,
                                   const std::vector<std::uint8_t>* skip,
                                   const KernelLadder* ladder) {
    const MeaningfulMap map = meaningful_map(img, model, hidden, skip);
    const std::vector<Component> comps = connected_components(map);
    std::vector<Detection> out;
    if (comps.empty()) return out;
    std::optional<KernelLadder> own;
    if (ladder == nullptr)
        own.emplace(model.kernels.alpha, ladder_r_max(img.width, img.height, model.kernels.alpha));
    const KernelLadder& lad = ladder != nullptr ? *ladder : *own;
    for (const Component& c : comps) {
        Detection det;
        det.x_pix = c.cx;
        det.y_pix = c.cy;
        det.x_sub = c.cx;
        det.y_sub = c.cy;
        det.nfa = static_cast<double>(model.grid_size) * normal_upper_tail(c.z_max);
        det.pass = label;
        det.scale_r = model.kernels.radius;
        const int cx = static_cast<int>(std::lround(c.cx));
        const int cy = static_cast<int>(std::lround(c.cy));
        try {
            const RadiusProfile prof =
                r_opt_scan(img, cx, cy, lad, model.sigma_mode, model.sigma, hidden);
            det.r_opt = prof.valid ? prof.r_opt : model.kernels.radius;
        } catch (const MeasurementUnavailableError&) {
            det.r_opt = model.kernels.radius;
        }
        try {
            det.background = measure_at(img, model.kernels, cx, cy, hidden).m2;
        } catch (const MeasurementUnavailableError&) {
            // Whole inner mask hidden at the centroid: fall back to the ring
            // mean of the unoccluded image, whose masks are known to fit.
            det.background = measure_at(img, model.kernels, cx, cy, nullptr).m2;
        }
        out.push_back(det);
    }
    return out;
}

std::vector<Detection> detect_with_hiding(const Image& img, const DetectionModel& model,
                                          int passes, double subpixel_radius) {
    if (passes < 1) throw InvalidConfigError("detect_with_hiding: passes must be >= 1");
    std::vector<Detection> all;
    if (resolve_grid_size(img.width, img.height, model.kernels) == 0) return all;
    HiddenRegions hidden(img.width, img.height);
    Image working = img;  // original with found particles painted over
    const KernelLadder ladder(model.kernels.alpha,
                              ladder_r_max(img.width, img.height, model.kernels.alpha));
    for (int pass = 0; pass < passes; ++pass) {
        const bool first = pass == 0;
        std::vector<std::uint8_t> skip;
        if (!first) skip = exclusion_mask(hidden, model.kernels.radius);
        std::vector<Detection> found =
            detect_pass(img, model, first ? nullptr : &hidden,
                        first ? DetectionPass::First : DetectionPass::AfterHiding,
                        first ? nullptr : &skip, &ladder);
        // Drop rediscoveries of particles already reported by an earlier pass.
        std::vector<Detection> fresh;
        for (const Detection& d : found) {
            bool duplicate = false;
            for (const Detection& prev : all) {
                const double dx = d.x_pix - prev.x_pix;
                const double dy = d.y_pix - prev.y_pix;
                if (dx * dx + dy * dy < model.kernels.radius * model.kernels.radius) {
                    duplicate = true;
                    break;
                }
            }
            if (!duplicate) fresh.push_back(d);
        }
        if (fresh.empty()) break;
        for (Detection& d : fresh) {
            refine_detection(working, d, subpixel_radius);
            hidden.add_disc(d.x_pix, d.y_pix, kHideRadiusFactor * d.r_opt, d.background);
        }
        // Repaint the working copy so later refinements see the occluded state.
        for (std::size_t i = 0; i < working.pixels.size(); ++i) {
            const int x = static_cast<int>(i % working.width);
            const int y = static_cast<int>(i / working.width);
            if (hidden.hidden(x, y)) working.pixels[i] = hidden.substitute(x, y);
        }
        all.insert(all.end(), fresh.begin(), fresh.end());
    }
    return all;
}

Point2 sub_pixel(const Image& img, double x_start, double y_start, double r) {
    const int cx = static_cast<int>(std::lround(x_start));
    const int cy = static_cast<int>(std::lround(y_start));
    const int ir = static_cast<int>(std::floor(r));
    if (cx - ir < 0 || cx + ir >= img.width || cy - ir < 0 || cy + ir >= img.height)
        return {x_start, y_start};
    std::vector<double> values;
    std::vector<std::pair<int, int>> members;
    for (int dy = -ir; dy <= ir; ++dy) {
        for (int dx = -ir; dx <= ir; ++dx) {
            if (static_cast<double>(dx) * dx + static_cast<double>(dy) * dy > r * r) continue;
            members.push_back({cx + dx, cy + dy});
            values.push_back(img.at(cx + dx, cy + dy));
        }
    }
    if (values.empty()) return {x_start, y_start};
    const double m = median(std::move(values));
    double wsum = 0.0, xsum = 0.0, ysum = 0.0;
    for (const auto& [px, py] : members) {
        const double w = std::max(img.at(px, py) - m, 0.0);
        wsum += w;
        xsum += w * px;
        ysum += w * py;
    }
    if (wsum <= 0.0) return {x_start, y_start};
    return {clamp_step(xsum / wsum, x_start - r, x_start + r),
            clamp_step(ysum / wsum, y_start - r, y_start + r)};
}

std::vector<Detection> detect_multiscale(const Image& img, const DetectorConfig& cfg) {
    if (cfg.radii.empty()) throw InvalidConfigError("detect_multiscale: radii must be nonempty");
    if (!std::is_sorted(cfg.radii.begin(), cfg.radii.end()))
        throw InvalidConfigError("detect_multiscale: radii must be ascending");
    double sigma = cfg.sigma;
    if (cfg.sigma_mode == SigmaMode::Global && !(sigma > 0.0))
        sigma = std::max(estimate_noise_sigma(img), sigma_floor(intensity_range(img).span()));
    std::vector<Detection> all;
    for (double r : cfg.radii) {
        DetectionModel model;
        model.kernels = build_kernels(r, cfg.alpha);
        model.epsilon = cfg.epsilon;
        model.grid_size = cfg.grid_size > 0
                              ? cfg.grid_size
                              : std::max(1LL, resolve_grid_size(img.width, img.height, model.kernels));
        model.sigma_mode = cfg.sigma_mode;
        model.sigma = sigma;
        std::vector<Detection> dets =
            detect_with_hiding(img, model, cfg.hiding_passes, cfg.subpixel_radius);
        all.insert(all.end(), dets.begin(), dets.end());
    }
    // Merge across scales: lower NFA first, ties to the smaller radius; a
    // detection is suppressed when a kept one lies within the smaller of the
    // two scale radii.
    std::sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) {
        if (a.nfa != b.nfa) return a.nfa < b.nfa;
        if (a.scale_r != b.scale_r) return a.scale_r < b.scale_r;
        if (a.y_sub != b.y_sub) return a.y_sub < b.y_sub;
        return a.x_sub < b.x_sub;
    });
    std::vector<Detection> merged;
    for (const Detection& d : all) {
        bool suppressed = false;
        for (const Detection& kept : merged) {
            const double lim = std::min(d.scale_r, kept.scale_r);
            const double dx = d.x_sub - kept.x_sub;
            const double dy = d.y_sub - kept.y_sub;
            if (dx * dx + dy * dy < lim * lim) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) merged.push_back(d);
    }
    return merged;
}

}  // namespace actrack
