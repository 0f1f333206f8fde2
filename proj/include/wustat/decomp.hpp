#pragma once

// Hoeffding decomposition of a weighted U-statistic under independent,
// non-identically distributed data:
//
//   U_n - E U_n = (1/n) sum_i h1_i(X_i) + U_n(a, h2).
//
// Expectations are exact finite sums for discrete models. Continuous models
// use adaptive quadrature and are limited to degree m <= 2.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wustat/core.hpp"
#include "wustat/distributions.hpp"

namespace wustat {

struct DecompOptions {
  /// Use the rank-statistic closed forms for h1, f and theta when the spec is
  /// a rank statistic. Disable to force the generic enumeration path.
  bool use_closed_forms = true;
  double abs_tol = 1e-10;
};

class DecompContext {
 public:
  DecompContext(const DistributionModel& model, UStatSpec spec, DecompOptions options = {});

  int n() const noexcept { return model_->size(); }
  int degree() const noexcept { return spec_.degree; }
  const DistributionModel& model() const noexcept { return *model_; }
  const UStatSpec& spec() const noexcept { return spec_; }
  bool closed_form() const noexcept { return rank_.has_value(); }

  /// E h(X_{i_1}, ..., X_{i_m}).
  double theta(std::span<const int> indices) const;

  /// E h(pi_l(x; Y_1, ..., Y_{m-1})) with Y_k ~ P_{others_k}; l is 1-based.
  double f_l(int l, double x, std::span<const int> others) const;

  /// First-order projection h_{1,i}(x).
  double h1(int i, double x) const;

  /// h1_i(X_i) for every i of a sample row.
  std::vector<double> h1_values(std::span<const double> sample) const;

  /// Completely degenerate remainder kernel h_{2; indices}(xs).
  double h2(std::span<const int> indices, std::span<const double> xs) const;

  /// E U_n = ((n-m)!/n!) sum a(i) theta(i).
  double expected_u() const;

  /// U_n(a, h2) on a sample.
  double remainder_u(std::span<const double> sample) const;

  /// |U_n - E U_n - (1/n) sum h1_i(X_i) - U_n(a, h2)|.
  double decomposition_residual(std::span<const double> sample) const;

  /// V(n) = n^-2 sum_i Var h1_i(X_i).
  double main_term_variance() const;

  /// Var h1_i(X_i).
  double h1_variance(int i) const;

  /// E g(h(X_{i_1}, ..., X_{i_m})) for a scalar transform g of the kernel.
  double kernel_expectation(std::span<const int> indices, const std::function<double(double)>& g) const;

  /// Pairwise theta table; available when closed_form().
  const ThetaTable& theta_table() const;

 private:
  struct Cache;
  double theta_cached(std::span<const int> indices, Cache* cache) const;
  double f_cached(int l, double x, std::span<const int> others, Cache* cache) const;
  double h1_cached(int i, double x, Cache* cache) const;
  double h2_cached(std::span<const int> indices, std::span<const double> xs, Cache* cache) const;
  double survival(int j, double x) const;
  double below(int j, double x) const;

  const DistributionModel* model_;
  UStatSpec spec_;
  DecompOptions options_;
  std::optional<RankStatKind> rank_;
  ThetaTable theta_;
  std::shared_ptr<const SurvivalTable> t_survival_;
  // Closed-form constants: row_offset_[i-1] = sum_j a(i,j) theta(i,j) + a(j,i) theta(j,i).
  std::vector<double> row_offset_;
};

/// Moments of the decomposition by summing over every joint outcome of a
/// discrete model (guard: prod_i |support_i| <= 1e6).
struct ExhaustiveMoments {
  double mean_u = 0.0;
  double var_u = 0.0;
  double var_main = 0.0;
  double var_remainder = 0.0;
  double cov_main_remainder = 0.0;
};

ExhaustiveMoments exhaustive_moments(const DecompContext& ctx);

/// Closed-form V(n) for identically distributed continuous data and Kendall:
/// (1/(12 n^2 (n-1)^2)) sum_i (2i - n - 1)^2 = (n+1)/(36 n (n-1)).
double iid_kendall_main_variance(int n);

}  // namespace wustat
