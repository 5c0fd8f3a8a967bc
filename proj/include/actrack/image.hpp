#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace actrack {

/// Dense grayscale image with double-valued pixels, row-major storage.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    std::size_t size() const { return pixels.size(); }
};

/// Minimum and maximum pixel value; {0, 0} for an empty image.
struct IntensityRange {
    double min = 0.0;
    double max = 0.0;
    double span() const { return max - min; }
};

IntensityRange intensity_range(const Image& img);

/// Robust noise standard deviation from the scaled median absolute deviation
/// of adjacent-pixel differences. Insensitive to constant offsets and linear
/// ramps; returns 0 for degenerate (sub-2-pixel) images.
double estimate_noise_sigma(const Image& img);

/// Reads a binary (P5) PGM file with maxval up to 65535. Two-byte samples are
/// big-endian per the format. Throws DataError on malformed input.
Image read_pgm(const std::string& path);

/// Writes a binary (P5) PGM file. Values are rounded and clamped to
/// [0, maxval]; maxval above 255 selects two-byte big-endian samples.
void write_pgm(const std::string& path, const Image& img, int maxval = 65535);

}  // namespace actrack
