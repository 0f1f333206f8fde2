#pragma once

// Composite normality tests with estimated mean and sd: Cramer-von Mises
// with Stephens's modification and Lilliefors (Kolmogorov-Smirnov) with the
// Dallal-Wilkinson p-value approximation.
//
// Both approximations are piecewise fits whose pieces do not meet exactly
// (gaps up to ~4e-3 in p). P-values are made non-increasing in the statistic
// by capping each piece at the left limits of the breakpoints before it.
// Ties are kept as raw order statistics.

#include <cstdint>
#include <span>
#include <string>

namespace wustat {

enum class GofTest { cvm, lilliefors };

std::string to_string(GofTest test);

struct GofResult {
  /// W^2 for CvM, the KS distance D for Lilliefors.
  double statistic = 0.0;
  double p_value = 1.0;
  GofTest test = GofTest::cvm;
  int n_obs = 0;
};

struct GofOptions {
  /// Replace the approximation by a seeded Monte Carlo null distribution.
  bool monte_carlo = false;
  int simulations = 100000;
  std::uint64_t seed = 0;
};

inline constexpr int kGofMinObservations = 8;

GofResult cvm_normality(std::span<const double> data, const GofOptions& options = {});
GofResult lilliefors(std::span<const double> data, const GofOptions& options = {});

/// Approximate p-values as functions of the raw statistic and sample size.
double cvm_p_value(double w2, int n);
double lilliefors_p_value(double d, int n);

}  // namespace wustat
