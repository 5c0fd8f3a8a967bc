#include "actrack/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "actrack/errors.hpp"
#include "actrack/stats.hpp"

namespace actrack {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr int kMinUsableRingPixels = 8;
constexpr double kSigmaFloorFraction = 1e-6;
constexpr double kSigmaFloorAbsolute = 1e-12;

double effective_value(const Image& img, const HiddenRegions* hidden, int x, int y) {
    if (hidden != nullptr && hidden->hidden(x, y)) return hidden->substitute(x, y);
    return img.at(x, y);
}
}  // namespace

MeasureKernels build_kernels(double radius, double alpha) {
    if (!(radius >= 1.0)) throw InvalidGeometryError("kernel radius must be >= 1");
    if (!(alpha > 1.0)) throw InvalidGeometryError("kernel alpha must be > 1");
    MeasureKernels k;
    k.radius = radius;
    k.alpha = alpha;
    const double r2 = radius * radius;
    const double outer2 = alpha * radius * alpha * radius;
    const int extent = static_cast<int>(std::floor(alpha * radius));
    for (int dy = -extent; dy <= extent; ++dy) {
        for (int dx = -extent; dx <= extent; ++dx) {
            const double d2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            if (d2 <= r2)
                k.inner.push_back({dx, dy});
            else if (d2 <= outer2)
                k.ring.push_back({dx, dy});
        }
    }
    if (k.ring.empty())
        throw InvalidGeometryError("ring mask is empty for radius " + std::to_string(radius) +
                                   ", alpha " + std::to_string(alpha));
    k.norm_diff = std::sqrt(1.0 / static_cast<double>(k.inner.size()) +
                            1.0 / static_cast<double>(k.ring.size()));
    int max_abs = 0;
    for (const Offset& o : k.ring) max_abs = std::max({max_abs, std::abs(o.dx), std::abs(o.dy)});
    k.extent = max_abs;
    return k;
}

double continuous_norm_diff(double radius, double alpha) {
    if (!(radius > 0.0)) throw InvalidGeometryError("kernel radius must be positive");
    if (!(alpha > 1.0)) throw InvalidGeometryError("kernel alpha must be > 1");
    return std::sqrt((1.0 + 1.0 / (alpha * alpha - 1.0)) / (kPi * radius * radius));
}

HiddenRegions::HiddenRegions(int width, int height)
    : width_(width),
      height_(height),
      mask_(static_cast<std::size_t>(width) * height, 0),
      substitute_(static_cast<std::size_t>(width) * height, 0.0) {}

void HiddenRegions::add_disc(double cx, double cy, double radius, double value) {
    discs_.push_back({cx, cy, radius, value});
    const double r2 = radius * radius;
    const int x0 = std::max(0, static_cast<int>(std::ceil(cx - radius)));
    const int x1 = std::min(width_ - 1, static_cast<int>(std::floor(cx + radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(cy - radius)));
    const int y1 = std::min(height_ - 1, static_cast<int>(std::floor(cy + radius)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            if (dx * dx + dy * dy > r2) continue;
            const std::size_t i = static_cast<std::size_t>(y) * width_ + x;
            if (mask_[i]) continue;
            mask_[i] = 1;
            substitute_[i] = value;
        }
    }
}

Measurement measure_at(const Image& img, const MeasureKernels& k, int x, int y,
                       const HiddenRegions* hidden) {
    if (x - k.extent < 0 || x + k.extent >= img.width || y - k.extent < 0 || y + k.extent >= img.height)
        throw MeasurementUnavailableError("measurement masks leave the image");
    double inner_sum = 0.0;
    std::size_t inner_hidden = 0;
    for (const Offset& o : k.inner) {
        const int px = x + o.dx;
        const int py = y + o.dy;
        if (hidden != nullptr && hidden->hidden(px, py)) ++inner_hidden;
        inner_sum += effective_value(img, hidden, px, py);
    }
    if (inner_hidden == k.inner.size())
        throw MeasurementUnavailableError("every inner pixel is hidden");
    double ring_sum = 0.0;
    for (const Offset& o : k.ring) ring_sum += effective_value(img, hidden, x + o.dx, y + o.dy);
    return {inner_sum / static_cast<double>(k.inner.size()),
            ring_sum / static_cast<double>(k.ring.size())};
}

double local_sigma(const Image& img, const MeasureKernels& k, int x, int y,
                   const HiddenRegions* hidden, double sigma_min) {
    if (x - k.extent < 0 || x + k.extent >= img.width || y - k.extent < 0 || y + k.extent >= img.height)
        throw MeasurementUnavailableError("measurement masks leave the image");
    std::vector<double> sample;
    sample.reserve(k.ring.size());
    for (const Offset& o : k.ring) {
        const int px = x + o.dx;
        const int py = y + o.dy;
        if (hidden != nullptr && hidden->hidden(px, py)) continue;
        sample.push_back(img.at(px, py));
    }
    if (sample.size() < kMinUsableRingPixels)
        throw MeasurementUnavailableError("fewer than 8 usable ring pixels");
    return std::max(mad_sigma(std::move(sample)), sigma_min);
}

double local_sigma(const Image& img, const MeasureKernels& k, int x, int y,
                   const HiddenRegions* hidden) {
    return local_sigma(img, k, x, y, hidden, sigma_floor(intensity_range(img).span()));
}

double sigma_floor(double intensity_span) {
    return std::max(kSigmaFloorFraction * intensity_span, kSigmaFloorAbsolute);
}

}  // namespace actrack
