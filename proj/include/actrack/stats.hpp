#pragma once

#include <vector>

namespace actrack {

/// Median of the sample; the vector is consumed (reordered). Even-sized
/// samples use the midpoint of the two central order statistics.
double median(std::vector<double> values);

/// Robust scale estimate: 1.4826 x median absolute deviation about the
/// sample median. The vector is consumed.
double mad_sigma(std::vector<double> values);

/// P(Z >= z) for standard normal Z, i.e. erfc(z / sqrt(2)) / 2.
double normal_upper_tail(double z);

/// Inverse of erfc on (0, 2). Accurate to ~1e-15 relative; monotone inputs
/// outside (0, 2) throw std::invalid_argument.
double inverse_erfc(double y);

/// z such that normal_upper_tail(z) == p, for p in (0, 1).
double inverse_normal_upper_tail(double p);

}  // namespace actrack
