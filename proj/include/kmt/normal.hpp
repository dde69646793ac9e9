#pragma once

#include <cmath>

namespace kmt {

// Standard normal CDF and its complement, accurate in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Inverse of normal_cdf on (0, 1); +-infinity at the endpoints.
double normal_quantile(double p);

}  // namespace kmt
