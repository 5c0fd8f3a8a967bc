#include "actrack/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>

#include "actrack/errors.hpp"

namespace actrack {

namespace {

constexpr double kMadToSigma = 1.4826022185056018;  // 1 / Phi^-1(3/4)

double median_in_place(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

// Skips whitespace and '#' comment lines between PGM header tokens.
int next_header_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw DataError(path + ": malformed PGM header");
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > std::numeric_limits<int>::max()) throw DataError(path + ": PGM header value out of range");
        c = in.get();
    }
    if (c != EOF) in.unget();
    return static_cast<int>(value);
}

}  // namespace

IntensityRange intensity_range(const Image& img) {
    if (img.pixels.empty()) return {};
    auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    return {*lo, *hi};
}

double estimate_noise_sigma(const Image& img) {
    std::vector<double> diffs;
    if (img.width >= 2) {
        diffs.reserve(static_cast<std::size_t>(img.width - 1) * img.height);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x + 1 < img.width; ++x) diffs.push_back(img.at(x + 1, y) - img.at(x, y));
    } else if (img.height >= 2) {
        diffs.reserve(static_cast<std::size_t>(img.height - 1) * img.width);
        for (int y = 0; y + 1 < img.height; ++y)
            for (int x = 0; x < img.width; ++x) diffs.push_back(img.at(x, y + 1) - img.at(x, y));
    }
    if (diffs.empty()) return 0.0;
    const double med = median_in_place(diffs);
    for (double& d : diffs) d = std::abs(d - med);
    const double mad = median_in_place(diffs);
    return kMadToSigma * mad / std::sqrt(2.0);
}

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path + ": cannot open for reading");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') throw DataError(path + ": not a binary PGM (P5) file");
    const int width = next_header_int(in, path);
    const int height = next_header_int(in, path);
    const int maxval = next_header_int(in, path);
    if (width <= 0 || height <= 0) throw DataError(path + ": invalid PGM dimensions");
    if (maxval <= 0 || maxval > 65535) throw DataError(path + ": unsupported PGM maxval");
    in.get();  // single whitespace byte after maxval

    Image img(width, height);
    const std::size_t count = img.size();
    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes_per_sample);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw DataError(path + ": truncated PGM pixel data");
    if (bytes_per_sample == 1) {
        for (std::size_t i = 0; i < count; ++i) img.pixels[i] = raw[i];
    } else {
        for (std::size_t i = 0; i < count; ++i)
            img.pixels[i] = static_cast<double>((static_cast<uint16_t>(raw[2 * i]) << 8) | raw[2 * i + 1]);
    }
    return img;
}

void write_pgm(const std::string& path, const Image& img, int maxval) {
    if (img.width <= 0 || img.height <= 0) throw DataError(path + ": refusing to write empty image");
    if (maxval <= 0 || maxval > 65535) throw DataError(path + ": unsupported PGM maxval");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n%d\n", img.width, img.height, maxval);
    out.write(header, n);

    const std::size_t count = img.size();
    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes_per_sample);
    for (std::size_t i = 0; i < count; ++i) {
        double v = std::nearbyint(img.pixels[i]);
        v = std::clamp(v, 0.0, static_cast<double>(maxval));
        const auto q = static_cast<uint16_t>(v);
        if (bytes_per_sample == 1) {
            raw[i] = static_cast<unsigned char>(q);
        } else {
            raw[2 * i] = static_cast<unsigned char>(q >> 8);
            raw[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError(path + ": write failed");
}

}  // namespace actrack
