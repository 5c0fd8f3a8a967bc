#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "actrack/geometry.hpp"
#include "actrack/image.hpp"
#include "actrack/kernels.hpp"

namespace actrack {

enum class SigmaMode { Global, Local };

// Statistical model for the per-pixel significance test. grid_size is the
// number of hypothesis tests the NFA is normalized by; resolve_grid_size
// derives it from the testable area when it is left at 0.
struct DetectionModel {
    MeasureKernels kernels;
    double epsilon = 1.0;
    long long grid_size = 1;
    SigmaMode sigma_mode = SigmaMode::Global;
    double sigma = 0.0;
};

enum class DetectionPass { First, AfterHiding };

struct Detection {
    double x_sub = 0.0;
    double y_sub = 0.0;
    double x_pix = 0.0;  // gravity center of the marked component
    double y_pix = 0.0;
    double nfa = 0.0;
    double r_opt = 0.0;
    DetectionPass pass = DetectionPass::First;
    double scale_r = 0.0;     // inner radius of the model that produced it
    double background = 0.0;  // ring mean recorded at detection time
};

// Number of false alarms for a contrast measurement under the noise model.
// Throws std::invalid_argument when sigma <= 0.
double nfa_at(const DetectionModel& model, double m1, double m2, double sigma);

// Threshold on the normalized score z = (m1-m2)/(sigma*normDiff) such that
// nfa_at <= epsilon iff z >= z_threshold. +infinity when epsilon <= 0.
double z_threshold(const DetectionModel& model);

// The same detection threshold expressed directly on the relative contrast
// (m1-m2)/sigma via the closed form under the continuous-kernel normalization.
double contrast_threshold(double epsilon, double grid_size, double radius, double alpha);

// Count of pixels whose outer mask fits inside a width x height image.
long long resolve_grid_size(int width, int height, const MeasureKernels& kernels);

struct MeaningfulMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> marked;  // 1 where the test fires
    std::vector<double> z;             // z-score where computed, NaN elsewhere
    bool marked_at(int x, int y) const {
        return marked[static_cast<std::size_t>(y) * width + x] != 0;
    }
};

// Per-pixel significance test. Pixels whose masks leave the image, pixels in
// `skip`, and pixels whose measurement is unavailable are left unmarked.
MeaningfulMap meaningful_map(const Image& img, const DetectionModel& model,
                             const HiddenRegions* hidden = nullptr,
                             const std::vector<std::uint8_t>* skip = nullptr);

struct Component {
    std::vector<std::pair<int, int>> pixels;
    double cx = 0.0;  // gravity center: unweighted mean of member coordinates
    double cy = 0.0;
    double z_max = 0.0;
};

// 8-connected components of the marked map, in scan order of their first pixel.
std::vector<Component> connected_components(const MeaningfulMap& map);

// Precomputed measurement kernels over the radius ladder used by the
// spreading-estimate scan: R = 1.0, 1.25, ... capped by r_max. Ladder values
// whose ring mask is empty are skipped.
class KernelLadder {
public:
    KernelLadder(double alpha, double r_max);
    const std::vector<MeasureKernels>& rungs() const { return rungs_; }
    double alpha() const { return alpha_; }

private:
    double alpha_ = 0.0;
    std::vector<MeasureKernels> rungs_;
};

double ladder_r_max(int width, int height, double alpha);

struct RadiusProfile {
    std::vector<std::pair<double, double>> scores;  // (R, (m1-m2)/sigma_eff)
    double r_opt = 0.0;
    bool valid = false;  // true iff some ladder score is strictly positive
};

// Scans the radius ladder at a fixed center and returns the argmax of the
// normalized contrast. Throws MeasurementUnavailableError when no ladder
// radius is admissible at this center.
RadiusProfile r_opt_scan(const Image& img, int x, int y, const KernelLadder& ladder,
                         SigmaMode sigma_mode, double sigma,
                         const HiddenRegions* hidden = nullptr);
RadiusProfile r_opt_scan(const Image& img, int x, int y, double alpha, SigmaMode sigma_mode,
                         double sigma, const HiddenRegions* hidden = nullptr);

// One detection sweep: significance map, component grouping, per-component
// spreading estimate. Detections are not yet sub-pixel refined (x_sub = x_pix).
std::vector<Detection> detect_pass(const Image& img, const DetectionModel& model,
                                   const HiddenRegions* hidden = nullptr,
                                   DetectionPass label = DetectionPass::First,
                                   const std::vector<std::uint8_t>* skip = nullptr,
                                   const KernelLadder* ladder = nullptr);

// Iterated detection with occlusion of previously found particles: each pass
// hides the discs of radius (2/1.45)*r_opt found so far (substituting the
// background value recorded at detection) and re-runs the sweep, keeping new
// centers at least one pixel away from the hidden discs. Detections are
// sub-pixel refined against the image state of the pass that found them.
std::vector<Detection> detect_with_hiding(const Image& img, const DetectionModel& model,
                                          int passes = 2, double subpixel_radius = 6.0);

// Weighted-centroid sub-pixel refinement over the disc of radius r centered at
// the rounded start position. Weights are the intensity excess over the disc
// median, clamped at zero; a flat disc or an out-of-bounds disc falls back to
// the start position. Each coordinate moves by at most r.
Point2 sub_pixel(const Image& img, double x_start, double y_start, double r);

struct DetectorConfig {
    std::vector<double> radii{2.0, 3.0};  // ascending inner radii
    double alpha = 2.0;
    double epsilon = 1.0;
    SigmaMode sigma_mode = SigmaMode::Global;
    double sigma = 0.0;  // 0 -> robust estimate from the image
    int hiding_passes = 2;
    double subpixel_radius = 6.0;
    long long grid_size = 0;  // 0 -> testable pixel count per scale
};

// Runs detect_with_hiding at every radius and merges detections closer than
// the smaller of their two radii, keeping the lower NFA (ties: smaller radius).
std::vector<Detection> detect_multiscale(const Image& img, const DetectorConfig& cfg);

}  // namespace actrack
