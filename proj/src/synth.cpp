#include "actrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "actrack/errors.hpp"

namespace actrack {

namespace {

constexpr double kPi = 3.14159265358979323846;

// splitmix64 finalizer: full-avalanche 64-bit mix.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

int poisson(Rng& rng, double lambda) {
    if (lambda < 0.0) throw InvalidConfigError("poisson: negative rate");
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > limit);
    return k - 1;
}

void validate_scene(const SceneSpec& spec) {
    if (spec.width < 1 || spec.height < 1)
        throw InvalidConfigError("scene: image dimensions must be positive");
    if (!(spec.noise_sigma >= 0.0))
        throw InvalidConfigError("scene: noiseSigma must be >= 0");
    for (const Spot& s : spec.spots) {
        if (!(s.amplitude > 0.0)) throw InvalidConfigError("scene: amplitudes must be > 0");
        if (!(s.sigma_s > 0.0)) throw InvalidConfigError("scene: sigma_s must be > 0");
    }
}

// Reflected index into [0, n): mirror about the edge pixels.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return i < n ? i : period - i;
}

// Separable Gaussian blur with edge-mirrored boundaries.
Image gaussian_blur(const Image& src, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (double& k : kernel) k /= total;

    Image tmp(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * src.at(reflect_index(x + i, src.width), y);
            tmp.at(x, y) = acc;
        }
    Image out(src.width, src.height);
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(x, reflect_index(y + i, src.height));
            out.at(x, y) = acc;
        }
    return out;
}

Image render_background(int width, int height, const Background& bg, Rng& rng) {
    Image img(width, height);
    switch (bg.kind) {
        case Background::Kind::Uniform: {
            std::fill(img.pixels.begin(), img.pixels.end(), bg.level);
            break;
        }
        case Background::Kind::Gradient: {
            const double theta = bg.direction_deg * kPi / 180.0;
            const double cx = std::cos(theta), cy = std::sin(theta);
            double pmin = 0.0, pmax = 0.0;
            bool first = true;
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const double p = cx * x + cy * y;
                    pmin = first ? p : std::min(pmin, p);
                    pmax = first ? p : std::max(pmax, p);
                    first = false;
                }
            const double span = pmax - pmin;
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    const double p = cx * x + cy * y;
                    img.at(x, y) = span > 0.0
                                       ? bg.low + (bg.high - bg.low) * (p - pmin) / span
                                       : bg.low;
                }
            break;
        }
        case Background::Kind::Nonuniform: {
            for (double& v : img.pixels) v = rng.gauss();
            img = gaussian_blur(img, bg.blur_sigma);
            const IntensityRange r = intensity_range(img);
            const double span = r.span();
            for (double& v : img.pixels)
                v = span > 0.0
                        ? bg.min_level + (bg.max_level - bg.min_level) * (v - r.min) / span
                        : bg.min_level;
            break;
        }
    }
    return img;
}

void add_spot(Image& img, const Spot& s) {
    const double reach = 6.0 * s.sigma_s;
    const int x0 = std::max(0, static_cast<int>(std::ceil(s.x - reach)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::floor(s.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(s.y - reach)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::floor(s.y + reach)));
    const double inv = 1.0 / (2.0 * s.sigma_s * s.sigma_s);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - s.x;
            const double dy = y - s.y;
            img.at(x, y) += s.amplitude * std::exp(-(dx * dx + dy * dy) * inv);
        }
}

void add_noise(Image& img, double sigma, Rng& rng) {
    if (sigma == 0.0) return;
    for (double& v : img.pixels) v += sigma * rng.gauss();
}

void validate_motion(const MotionSpec& spec) {
    if (spec.frames < 3) throw InvalidConfigError("motion: need at least 3 frames");
    if (spec.density < 0) throw InvalidConfigError("motion: negative density");
    if (!(spec.step_std >= 0.0)) throw InvalidConfigError("motion: stepStd must be >= 0");
    if (!(spec.speed >= 0.0)) throw InvalidConfigError("motion: speed must be >= 0");
    if (!(spec.appear_rate >= 0.0)) throw InvalidConfigError("motion: appearRate must be >= 0");
    for (double p : {spec.p_to_directed, spec.p_to_brownian, spec.p_start_directed,
                     spec.disappear_prob}) {
        if (!(p >= 0.0 && p <= 1.0))
            throw InvalidConfigError("motion: probabilities must lie in [0, 1]");
    }
}

// Folds v into [0, limit] by mirror reflection; flips *direction on each fold.
double reflect_coordinate(double v, double limit, double* direction) {
    while (v < 0.0 || v > limit) {
        if (v < 0.0) v = -v;
        if (v > limit) v = 2.0 * limit - v;
        if (direction) *direction = -*direction;
    }
    return v;
}

struct LiveParticle {
    TimedTrack track;
    bool directed = false;
    double vx = 0.0;
    double vy = 0.0;
};

}  // namespace

double Rng::gauss() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return mix64(base ^ mix64(index));
}

Background Background::uniform(double level) {
    Background b;
    b.kind = Kind::Uniform;
    b.level = level;
    return b;
}

Background Background::gradient(double low, double high, double direction_deg) {
    Background b;
    b.kind = Kind::Gradient;
    b.low = low;
    b.high = high;
    b.direction_deg = direction_deg;
    return b;
}

Background Background::nonuniform(double min_level, double max_level, double blur_sigma) {
    if (!(blur_sigma > 0.0)) throw InvalidConfigError("background: blur sigma must be > 0");
    if (!(max_level >= min_level))
        throw InvalidConfigError("background: max level below min level");
    Background b;
    b.kind = Kind::Nonuniform;
    b.min_level = min_level;
    b.max_level = max_level;
    b.blur_sigma = blur_sigma;
    return b;
}

double snr_to_amplitude(double snr, double noise_sigma) {
    if (!(snr > 0.0)) throw InvalidConfigError("snr_to_amplitude: snr must be > 0");
    if (!(noise_sigma >= 0.0))
        throw InvalidConfigError("snr_to_amplitude: noiseSigma must be >= 0");
    return snr * noise_sigma;
}

Image render_clean(const SceneSpec& spec) {
    validate_scene(spec);
    Rng bg_rng(derive_seed(spec.rng_seed, 1));
    Image img = render_background(spec.width, spec.height, spec.background, bg_rng);
    for (const Spot& s : spec.spots) add_spot(img, s);
    return img;
}

RenderedFrame render_frame(const SceneSpec& spec) {
    RenderedFrame out;
    out.image = render_clean(spec);
    Rng noise_rng(derive_seed(spec.rng_seed, 2));
    add_noise(out.image, spec.noise_sigma, noise_rng);
    out.truth.reserve(spec.spots.size());
    for (const Spot& s : spec.spots) out.truth.push_back({s.x, s.y});
    return out;
}

std::vector<TimedTrack> simulate_tracks(const MotionSpec& spec, int width, int height) {
    validate_motion(spec);
    if (width < 2 || height < 2)
        throw InvalidConfigError("motion: domain must be at least 2x2");
    const double x_limit = width - 1.0;
    const double y_limit = height - 1.0;
    Rng rng(derive_seed(spec.rng_seed, 3));

    std::vector<TimedTrack> done;
    std::deque<LiveParticle> live;
    auto spawn = [&](int frame) {
        LiveParticle p;
        p.track.start_frame = frame;
        p.track.positions.push_back({rng.uniform(0.0, x_limit), rng.uniform(0.0, y_limit)});
        if (spec.scenario == MotionModel::Receptor &&
            rng.uniform() < spec.p_start_directed) {
            p.directed = true;
            const double heading = rng.uniform(0.0, 2.0 * kPi);
            p.vx = spec.speed * std::cos(heading);
            p.vy = spec.speed * std::sin(heading);
        }
        live.push_back(std::move(p));
    };

    for (int i = 0; i < spec.density; ++i) spawn(0);
    for (int k = 1; k < spec.frames; ++k) {
        // Advance the live set in spawn order: death draw, state switch, step.
        for (std::size_t idx = 0; idx < live.size();) {
            LiveParticle& p = live[idx];
            if (rng.uniform() < spec.disappear_prob) {
                done.push_back(std::move(p.track));
                live.erase(live.begin() + static_cast<std::ptrdiff_t>(idx));
                continue;
            }
            if (spec.scenario == MotionModel::Receptor) {
                if (!p.directed && rng.uniform() < spec.p_to_directed) {
                    p.directed = true;
                    const double heading = rng.uniform(0.0, 2.0 * kPi);
                    p.vx = spec.speed * std::cos(heading);
                    p.vy = spec.speed * std::sin(heading);
                } else if (p.directed && rng.uniform() < spec.p_to_brownian) {
                    p.directed = false;
                }
            }
            Point2 pos = p.track.positions.back();
            if (p.directed) {
                pos.x += p.vx;
                pos.y += p.vy;
            } else {
                pos.x += spec.step_std * rng.gauss();
                pos.y += spec.step_std * rng.gauss();
            }
            pos.x = reflect_coordinate(pos.x, x_limit, p.directed ? &p.vx : nullptr);
            pos.y = reflect_coordinate(pos.y, y_limit, p.directed ? &p.vy : nullptr);
            p.track.positions.push_back(pos);
            ++idx;
        }
        const int births = poisson(rng, spec.appear_rate);
        for (int b = 0; b < births; ++b) spawn(k);
    }
    for (LiveParticle& p : live) done.push_back(std::move(p.track));
    std::sort(done.begin(), done.end(), [](const TimedTrack& a, const TimedTrack& b) {
        if (a.start_frame != b.start_frame) return a.start_frame < b.start_frame;
        if (a.positions.size() != b.positions.size())
            return a.positions.size() > b.positions.size();
        if (a.positions.empty()) return false;
        return a.positions.front().x < b.positions.front().x;
    });
    return done;
}

SimulatedSequence simulate_sequence(const MotionSpec& spec, const SequenceScene& scene) {
    if (scene.width < 2 || scene.height < 2)
        throw InvalidConfigError("sequence: domain must be at least 2x2");
    if (!(scene.sigma_s > 0.0)) throw InvalidConfigError("sequence: sigma_s must be > 0");
    if (!(scene.noise_sigma >= 0.0))
        throw InvalidConfigError("sequence: noiseSigma must be >= 0");
    const double amplitude = snr_to_amplitude(scene.snr, scene.noise_sigma);

    SimulatedSequence out;
    out.truth = simulate_tracks(spec, scene.width, scene.height);

    Rng bg_rng(derive_seed(spec.rng_seed, 1));
    const Image background =
        render_background(scene.width, scene.height, scene.background, bg_rng);

    out.frames.reserve(spec.frames);
    for (int k = 0; k < spec.frames; ++k) {
        Image frame = background;
        for (const TimedTrack& t : out.truth) {
            if (k < t.start_frame || k > t.last_frame()) continue;
            const Point2& pos = t.positions[static_cast<std::size_t>(k - t.start_frame)];
            add_spot(frame, {pos.x, pos.y, scene.sigma_s, amplitude});
        }
        Rng noise_rng(derive_seed(spec.rng_seed, 1000 + static_cast<std::uint64_t>(k)));
        add_noise(frame, scene.noise_sigma, noise_rng);
        out.frames.push_back(std::move(frame));
    }
    return out;
}

}  // namespace actrack
