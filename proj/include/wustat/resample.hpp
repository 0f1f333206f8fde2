#pragma once

// Resampling estimators of Var(U_n): Efron bootstrap of the full statistic,
// main-term bootstrap of the projections h1_i(X_i), and moving-block
// resampling
//
//   V*_n = (1 / (h_n (n - b + 1))) sum_i Var*(U*_{b,i}).
//
// Replicate r of block i draws from stream(seed).child(i * B + r), so the
// block-0 replicates of a moving-block run coincide with an Efron run on the
// same seed, and results do not depend on the thread count.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "wustat/core.hpp"
#include "wustat/rng.hpp"

namespace wustat {

enum class ResamplingMethod { efron, main_term, moving_block, exact_oracle };

struct ResamplingPlan {
  ResamplingMethod method = ResamplingMethod::efron;
  int replicates = 2000;
  /// Block length b (moving_block only).
  int block = 0;
  /// h_n (moving_block only); 0 selects n / b.
  double scale = 0.0;
  std::uint64_t seed = 0;
  /// Worker threads; 0 uses every hardware thread.
  int threads = 1;
};

ResamplingPlan efron_plan(int replicates, std::uint64_t seed);
ResamplingPlan moving_block_plan(int block, int replicates, std::uint64_t seed, double scale = 0.0);

struct VarianceEstimate {
  double value = 0.0;
  ResamplingPlan plan;
  /// Monte Carlo standard error, sqrt((m4 - s^4) / B) over replicates; 0 for exact results.
  double mc_std_error = 0.0;
};

/// Root stream of every resampling run with this seed.
Stream resampling_stream(std::uint64_t seed);

/// Sample variance (divisor B - 1) of U* over B Efron resamples. The i-th
/// draw occupies index position i.
VarianceEstimate efron_variance(std::span<const double> sample, const UStatSpec& spec, const ResamplingPlan& plan);
VarianceEstimate efron_variance(std::span<const double> sample, const UStatSpec& spec, const ResamplingPlan& plan,
                                const Stream& stream);

/// Largest sample and degree for which the n^n resamples are enumerated.
inline constexpr int kExactBootstrapMaxN = 6;
inline constexpr int kExactBootstrapMaxDegree = 3;

/// Var*(U*) over all n^n equally likely resamples.
VarianceEstimate exact_bootstrap_variance(std::span<const double> sample, const UStatSpec& spec);

struct MainTermBootstrap {
  /// (1/n) sum h1* - (1/n) sum h1, one per replicate.
  std::vector<double> centered_means;
  double variance = 0.0;
  double mc_std_error = 0.0;
};

MainTermBootstrap main_term_bootstrap(std::span<const double> h1_values, int replicates, std::uint64_t seed);
MainTermBootstrap main_term_bootstrap(std::span<const double> h1_values, int replicates, const Stream& stream);

VarianceEstimate moving_block_variance(std::span<const double> sample, const UStatSpec& spec,
                                       const ResamplingPlan& plan);
VarianceEstimate moving_block_variance(std::span<const double> sample, const UStatSpec& spec,
                                       const ResamplingPlan& plan, const Stream& stream);

/// Moving-block estimate with each Var*(U*_{b,i}) enumerated exactly (b <= 6).
VarianceEstimate exact_moving_block_variance(std::span<const double> sample, const UStatSpec& spec, int block,
                                             double scale = 0.0);

/// point -/+ z_{(1+level)/2} sqrt(variance).
std::pair<double, double> normal_ci(double point, double variance, double level);

}  // namespace wustat
