#pragma once

// Average weights A_{K,q}(n), heterogeneity measures M1/M2 and finite-n
// condition reports.
//
// A_{K,q}(n) averages |a(i^(1)) ... a(i^(K))| over K-tuples of index vectors
// from I_n^m whose index sets share at least q common elements.

#include <optional>

#include "wustat/core.hpp"
#include "wustat/decomp.hpp"

namespace wustat {

enum class Normalization {
  /// Divide by n^{q + K(m - q)}, the order of the family's cardinality.
  power_of_n,
  /// Divide by the exact cardinality of the index family.
  exact_cardinality,
};

enum class WeightMethod {
  /// Closed forms for m = 2 (any K, q), enumeration otherwise.
  automatic,
  enumerate,
};

struct WeightSummary {
  int n = 0;
  int K = 0;
  int q = 0;
  double value = 0.0;
  Normalization normalization = Normalization::power_of_n;
  /// Unnormalized sum of |a ... a| and the exact family size.
  double total = 0.0;
  double cardinality = 0.0;
};

WeightSummary average_weight(const UStatSpec& spec, int n, int K, int q,
                             Normalization normalization = Normalization::power_of_n,
                             WeightMethod method = WeightMethod::automatic);

/// sum_i sum_j sum_k g(i,j) g(i,k) with g(i,j) = 1(j<i)/(i-1) - 1(j>i)/(j-1).
double sum_weight_identity(int n);

struct HeterogeneityMeasures {
  double M1 = 0.0;
  double M2 = 0.0;
};

/// Largest n accepted by heterogeneity_measures (the M2 scan is O(n^3)).
inline constexpr int kHeterogeneityGuard = 200;

/// M1 = spread of theta over I_n^m; M2 (degree 2 only) = the largest spread,
/// over the free index, of E[G_p(u; X_c) G_q(s; X_c)] where
/// G_p(u; x) = E h(pi_p(x; X_u)).
HeterogeneityMeasures heterogeneity_measures(const DecompContext& ctx);

struct HeterogeneityReport {
  double M = 0.0;
  double M1 = 0.0;
  double M2 = 0.0;
  double A22 = 0.0;
  double A31 = 0.0;
  double A21 = 0.0;
  double V = 0.0;
  double sigma2 = 0.0;
  /// True when sigma2 was not supplied and V stands in for Var(U_n).
  bool sigma2_from_main_term = false;
  double ratio13 = 0.0;
  double ratio14 = 0.0;
  double ratio_boot = 0.0;
};

/// Assembles the finite-n ratios
///   n^-2 V^-1 A22 M^1/2,  n^-2 V^-3/2 A31 M^3/4,  n^-1 sigma^-2 A21 (M1^2 + M2 + 1/n).
/// M is 1 for indicator kernels and max E h^4 otherwise.
HeterogeneityReport condition_report(const DecompContext& ctx, std::optional<double> sigma2 = std::nullopt);

}  // namespace wustat
