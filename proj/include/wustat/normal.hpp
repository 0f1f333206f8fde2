#pragma once

#include <cmath>
#include <numbers>

namespace wustat {

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Phi(x).
inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// 1 - Phi(x), accurate in the upper tail.
inline double normal_sf(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Phi^{-1}(p) for p in (0, 1); throws RangeError otherwise.
double normal_quantile(double p);

}  // namespace wustat
