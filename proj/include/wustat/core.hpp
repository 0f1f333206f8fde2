#pragma once

// Weighted U-statistics of degree m.
//
//   U_n = (n-m)!/n! * sum over ordered m-tuples of distinct indices of
//         a(i_1, ..., i_m) * h(X_{i_1}, ..., X_{i_m})
//
// Index convention: weight functions receive 1-based indices and the sample
// size n; AP, for instance, is a(i, j) = n * 1(j < i) / (i - 1).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wustat {

enum class RankStatKind { kendall, ap };

std::string to_string(RankStatKind kind);
RankStatKind parse_rank_stat(const std::string& name);

using WeightFn = std::function<double(std::span<const int> indices, int n)>;
using KernelFn = std::function<double(std::span<const double> values)>;

struct UStatSpec {
  int degree = 2;
  WeightFn weight;
  KernelFn kernel;
  std::string name;
  /// Set when the statistic is one of the rank statistics; enables the
  /// O(n log n) evaluators and the closed-form decomposition. The kernel is
  /// then the strict concordance indicator h(x, y) = 1(y > x).
  std::optional<RankStatKind> rank;
};

UStatSpec rank_spec(RankStatKind kind);
inline UStatSpec kendall_spec() { return rank_spec(RankStatKind::kendall); }
inline UStatSpec ap_spec() { return rank_spec(RankStatKind::ap); }

/// Weight a(i_1, ..., i_m) of `kind` at sample size n (1-based indices).
double rank_weight(RankStatKind kind, int i, int j, int n) noexcept;

/// Largest n^m accepted by the enumerating evaluators.
inline constexpr double kEnumerationGuard = 1e8;

/// Throws InvalidInput unless every value is finite and there are at least
/// `min_length` of them.
void validate_sample(std::span<const double> sample, int min_length);

/// Naive enumeration in index-lexicographic order with compensated summation.
double eval_weighted_ustat(std::span<const double> sample, const UStatSpec& spec);

/// Kendall statistic U = (tau + 1) / 4 by merge-sort inversion counting.
double kendall_u(std::span<const double> sample);

/// AP statistic U = (tau_AP + 1) / 2 with a Fenwick tree over prefix ranks.
double ap_u(std::span<const double> sample);

double rank_u(RankStatKind kind, std::span<const double> sample);

/// tau from its U transform; u must lie in [0, 1].
double tau_from_u(RankStatKind kind, double u);

/// Reusable scratch buffers for the rank evaluators in hot loops. Performs no
/// input validation.
class RankWorkspace {
 public:
  double kendall(std::span<const double> sample);
  double ap(std::span<const double> sample);
  double evaluate(RankStatKind kind, std::span<const double> sample) {
    return kind == RankStatKind::kendall ? kendall(sample) : ap(sample);
  }

 private:
  std::vector<double> values_;
  std::vector<double> scratch_;
  std::vector<double> sorted_;
  std::vector<int> tree_;
};

/// Number of pairs j < i with x_j > x_i.
std::int64_t count_inversions(std::span<const double> sample);

/// Evaluates U for `spec` on `sample`, taking the fast path for rank specs.
double evaluate(std::span<const double> sample, const UStatSpec& spec);

}  // namespace wustat
