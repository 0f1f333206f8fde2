#pragma once

// Random discrete models and weighted U-statistic specs for property tests.

#include <cmath>
#include <memory>
#include <vector>

#include "wustat/core.hpp"
#include "wustat/distributions.hpp"
#include "wustat/rng.hpp"

namespace wustat::testing {

inline DistributionModel random_discrete_model(Generator& g, int n, int max_support = 3) {
  std::vector<DiscreteLaw> laws;
  for (int i = 0; i < n; ++i) {
    const int k = 1 + static_cast<int>(g.below(max_support));
    DiscreteLaw law;
    double total = 0.0;
    for (int s = 0; s < k; ++s) {
      // Small integer grid so that ties across indices are common.
      law.support.push_back(static_cast<double>(g.below(5)) - 2.0);
      law.probabilities.push_back(0.1 + g.uniform());
      total += law.probabilities.back();
    }
    for (double& p : law.probabilities) p /= total;
    laws.push_back(std::move(law));
  }
  return DistributionModel::discrete(std::move(laws));
}

/// Random polynomial kernel of total degree <= 3 and a position-dependent
/// weight mixing a smooth part with an order indicator.
inline UStatSpec random_spec(Generator& g, int m) {
  auto coef = std::make_shared<std::vector<double>>();
  for (int k = 0; k < 4 + 3 * m; ++k) coef->push_back(2.0 * g.uniform() - 1.0);
  UStatSpec spec;
  spec.degree = m;
  spec.name = "random";
  spec.kernel = [coef, m](std::span<const double> x) {
    const auto& c = *coef;
    double v = c[0];
    for (int a = 0; a < m; ++a) v += c[1 + a] * x[a] + c[1 + m + a] * x[a] * x[a] * x[a];
    double prod = 1.0;
    for (int a = 0; a < m; ++a) prod *= x[a];
    v += c[1 + 2 * m] * prod + c[2 + 2 * m] * (x[m - 1] > x[0] ? 1.0 : 0.0);
    return v;
  };
  spec.weight = [coef, m](std::span<const int> t, int n) {
    const auto& c = *coef;
    double w = c[3 + 2 * m];
    for (int a = 0; a < m; ++a) w += c[4 + 2 * m + a] * t[a] / static_cast<double>(n);
    return w + (t[0] > t[m - 1] ? 1.0 : 0.0);
  };
  return spec;
}

}  // namespace wustat::testing
