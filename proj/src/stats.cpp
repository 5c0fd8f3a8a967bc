#include "actrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace actrack {

namespace {
constexpr double kMadToSigma = 1.4826022185056018;  // 1 / Phi^-1(3/4)
constexpr double kSqrtPi = 1.7724538509055160;
}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty sample");
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double hi = values[mid];
    if (n % 2 == 1) return hi;
    std::nth_element(values.begin(), values.begin() + mid - 1, values.begin() + mid);
    return 0.5 * (values[mid - 1] + hi);
}

double mad_sigma(std::vector<double> values) {
    const double med = median(values);
    for (double& v : values) v = std::abs(v - med);
    return kMadToSigma * median(std::move(values));
}

double normal_upper_tail(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double inverse_erfc(double y) {
    if (!(y > 0.0 && y < 2.0)) throw std::invalid_argument("inverse_erfc domain is (0, 2)");
    // erfc is strictly decreasing; bisect, then polish with Newton steps.
    // erfc(27.3) underflows double, so [-27.5, 27.5] always brackets.
    double lo = -27.5, hi = 27.5;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (std::erfc(mid) > y)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 3; ++i) {
        const double deriv = -2.0 / kSqrtPi * std::exp(-x * x);
        if (deriv == 0.0) break;
        const double step = (std::erfc(x) - y) / deriv;
        if (!std::isfinite(step)) break;
        x -= step;
    }
    return x;
}

double inverse_normal_upper_tail(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_upper_tail domain is (0, 1)");
    return std::sqrt(2.0) * inverse_erfc(2.0 * p);
}

}  // namespace actrack
