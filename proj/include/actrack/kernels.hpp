#pragma once

#include <cstdint>
#include <vector>

#include "actrack/geometry.hpp"
#include "actrack/image.hpp"

namespace actrack {

/// Matched pair of measurement masks around a center pixel: a closed inner
/// disc (dx^2 + dy^2 <= R^2) and the surrounding ring (R^2 < dx^2 + dy^2
/// <= (alpha R)^2). Membership is hard (no area weighting).
struct MeasureKernels {
    double radius = 0.0;
    double alpha = 0.0;
    std::vector<Offset> inner;
    std::vector<Offset> ring;
    /// sqrt(1/|inner| + 1/|ring|): the L2 norm of the difference of the two
    /// mean filters, so (m1 - m2) / (sigma * norm_diff) is standard normal
    /// under i.i.d. Gaussian noise.
    double norm_diff = 0.0;
    /// Largest |dx| (= largest |dy|) over both masks; a center needs this
    /// margin from every image border to be measurable.
    int extent = 0;
};

/// Builds the masks for the given geometry. Throws InvalidGeometryError when
/// R < 1, alpha <= 1, or the ring contains no pixel.
MeasureKernels build_kernels(double radius, double alpha);

/// Continuous-domain counterpart of MeasureKernels::norm_diff:
/// sqrt((1 + 1/(alpha^2 - 1)) / (pi R^2)).
double continuous_norm_diff(double radius, double alpha);

/// Circular regions whose pixels are replaced by a recorded background value
/// for every subsequent measurement (used between detection passes).
class HiddenRegions {
public:
    struct Disc {
        double cx = 0.0;
        double cy = 0.0;
        double radius = 0.0;
        double value = 0.0;
    };

    HiddenRegions(int width, int height);

    /// Paints a disc. Pixels already hidden keep their earlier substitute.
    void add_disc(double cx, double cy, double radius, double value);

    bool empty() const { return discs_.empty(); }
    bool hidden(int x, int y) const { return mask_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    double substitute(int x, int y) const { return substitute_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<Disc>& discs() const { return discs_; }
    int width() const { return width_; }
    int height() const { return height_; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Disc> discs_;
    std::vector<std::uint8_t> mask_;
    std::vector<double> substitute_;
};

/// Mean intensities over the inner disc (m1) and the ring (m2).
struct Measurement {
    double m1 = 0.0;
    double m2 = 0.0;
};

/// Measures m1/m2 at (x, y). Hidden pixels contribute their substitute value
/// instead of the image value. Throws MeasurementUnavailableError when the
/// masks leave the image or every inner pixel is hidden.
Measurement measure_at(const Image& img, const MeasureKernels& k, int x, int y,
                       const HiddenRegions* hidden = nullptr);

/// Robust local noise scale: 1.4826 x MAD of the ring values about the ring
/// median, floored at sigma_min. Hidden ring pixels are excluded from the
/// sample; fewer than 8 usable ring pixels raise MeasurementUnavailableError.
double local_sigma(const Image& img, const MeasureKernels& k, int x, int y,
                   const HiddenRegions* hidden, double sigma_min);

/// Convenience overload deriving sigma_min as 1e-6 x the image intensity
/// span (with a tiny absolute floor so the result stays positive). Scans the
/// whole image for its range; prefer the explicit overload in hot loops.
double local_sigma(const Image& img, const MeasureKernels& k, int x, int y,
                   const HiddenRegions* hidden = nullptr);

/// The sigma_min floor used by local_sigma for a given intensity span.
double sigma_floor(double intensity_span);

}  // namespace actrack
