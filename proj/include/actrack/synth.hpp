#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "actrack/geometry.hpp"
#include "actrack/image.hpp"

namespace actrack {

/// Seeded random source with a fixed, portable mapping from the mt19937_64
/// stream to doubles, so fixtures reproduce byte-for-byte across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1): the top 53 bits of one engine draw.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; generated in pairs, one value cached.
    double gauss();

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives an independent stream seed (frame seeds, jitter seeds, ...) from a
/// base seed and an index, via a fixed 64-bit mixing function.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct Background {
    enum class Kind { Uniform, Gradient, Nonuniform };

    Kind kind = Kind::Uniform;
    double level = 0.0;       // uniform
    double low = 0.0;         // gradient: value at the lowest projection
    double high = 0.0;        // gradient: value at the highest projection
    double direction_deg = 0.0;
    double min_level = 0.0;   // nonuniform: rescaled field minimum
    double max_level = 0.0;   // nonuniform: rescaled field maximum
    double blur_sigma = 40.0; // nonuniform: Gaussian blur std in pixels

    static Background uniform(double level);
    static Background gradient(double low, double high, double direction_deg);
    static Background nonuniform(double min_level, double max_level, double blur_sigma);
};

struct Spot {
    double x = 0.0;
    double y = 0.0;
    double sigma_s = 1.0;   // PSF standard deviation in pixels
    double amplitude = 0.0; // peak value added at the spot center
};

struct SceneSpec {
    int width = 0;
    int height = 0;
    Background background;
    std::vector<Spot> spots;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;
};

struct RenderedFrame {
    Image image;
    std::vector<Point2> truth; // exact sub-pixel spot centers
};

/// Peak-over-noise convention: the spot's peak amplitude is snr * noiseSigma.
/// The background level does not enter (additive noise model).
double snr_to_amplitude(double snr, double noise_sigma);

/// background + sum of Gaussian spots (sampled at pixel centers, truncated at
/// 6 sigma_s) + white Gaussian noise. Deterministic given spec.rng_seed.
RenderedFrame render_frame(const SceneSpec& spec);

/// The noiseless part of render_frame (background + spots, no noise draw).
Image render_clean(const SceneSpec& spec);

enum class MotionModel { Vesicle, Receptor };

struct MotionSpec {
    MotionModel scenario = MotionModel::Vesicle;
    int density = 100;            // particles alive at frame 0
    int frames = 3;               // K
    double step_std = 1.5;        // Brownian per-axis step std, pixels
    double speed = 3.0;           // directed-state displacement per frame
    double p_to_directed = 0.0;   // P(brownian -> directed) per step
    double p_to_brownian = 0.0;   // P(directed -> brownian) per step
    double p_start_directed = 0.0;
    double appear_rate = 0.0;     // expected new tracks per frame (Poisson)
    double disappear_prob = 0.0;  // per-frame death probability
    std::uint64_t rng_seed = 0;
};

/// Ground-truth trajectories over a width x height domain with reflective
/// boundaries; every track is hole-free and stays inside the domain.
std::vector<TimedTrack> simulate_tracks(const MotionSpec& spec, int width, int height);

/// Scene defaults used when rendering a simulated sequence.
struct SequenceScene {
    int width = 512;
    int height = 512;
    Background background = Background::uniform(1000.0);
    double noise_sigma = 100.0;
    double sigma_s = 2.0;
    double snr = 4.0;
};

struct SimulatedSequence {
    std::vector<Image> frames;
    std::vector<TimedTrack> truth;
};

/// simulate_tracks + one render_frame per frame (independent per-frame noise
/// seeds derived from spec.rng_seed, so frames may render in parallel).
SimulatedSequence simulate_sequence(const MotionSpec& spec, const SequenceScene& scene);

}  // namespace actrack
