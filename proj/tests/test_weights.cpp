#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "random_cases.hpp"
#include "wustat/weights.hpp"

using namespace wustat;
using wustat::testing::random_discrete_model;
using wustat::testing::random_spec;

namespace {

double harmonic(int k) {
  double s = 0.0;
  for (int j = 1; j <= k; ++j) s += 1.0 / j;
  return s;
}

UStatSpec constant_weight_spec() {
  UStatSpec s;
  s.degree = 2;
  s.kernel = [](std::span<const double> x) { return x[1] > x[0] ? 1.0 : 0.0; };
  s.weight = [](std::span<const int>, int) { return 1.0; };
  return s;
}

std::vector<std::vector<int>> ordered_tuples(int n, int m) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(m, 1);
  while (true) {
    if (std::set<int>(t.begin(), t.end()).size() == static_cast<std::size_t>(m)) out.push_back(t);
    int k = m - 1;
    while (k >= 0 && t[k] == n) t[k--] = 1;
    if (k < 0) return out;
    ++t[k];
  }
}

// Plain K-fold product enumeration without pruning: {total, cardinality}.
std::pair<double, double> naive_family(const UStatSpec& spec, int n, int K, int q) {
  const auto tuples = ordered_tuples(n, spec.degree);
  const std::size_t T = tuples.size();
  std::vector<std::size_t> pick(K, 0);
  double total = 0.0, count = 0.0;
  while (true) {
    std::set<int> common(tuples[pick[0]].begin(), tuples[pick[0]].end());
    double prod = 1.0;
    for (int k = 0; k < K; ++k) {
      const auto& t = tuples[pick[k]];
      std::set<int> next;
      for (int v : t)
        if (common.count(v)) next.insert(v);
      common = next;
      prod *= std::abs(spec.weight(t, n));
    }
    if (static_cast<int>(common.size()) >= q) {
      total += prod;
      count += 1.0;
    }
    int k = K - 1;
    while (k >= 0 && pick[k] == T - 1) pick[k--] = 0;
    if (k < 0) return {total, count};
    ++pick[k];
  }
}

// E[h(X_r) h(X_s)] by summing over the joint outcomes of the indices involved.
double joint_product_moment(const DistributionModel& model, const UStatSpec& spec, const std::vector<int>& r,
                            const std::vector<int>& s) {
  std::vector<int> ids(r);
  for (int v : s)
    if (std::find(ids.begin(), ids.end(), v) == ids.end()) ids.push_back(v);
  std::vector<std::size_t> pos(ids.size(), 0);
  double total = 0.0;
  while (true) {
    std::vector<double> x(model.size() + 1, 0.0);
    double p = 1.0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      x[ids[k]] = model.law(ids[k]).support[pos[k]];
      p *= model.law(ids[k]).probabilities[pos[k]];
    }
    const double xr[2] = {x[r[0]], x[r[1]]};
    const double xs[2] = {x[s[0]], x[s[1]]};
    total += p * spec.kernel(xr) * spec.kernel(xs);
    std::size_t k = 0;
    for (; k < ids.size(); ++k) {
      if (++pos[k] < model.law(ids[k]).support.size()) break;
      pos[k] = 0;
    }
    if (k == ids.size()) return total;
  }
}

// M2 straight from its definition: r, s share exactly one index c with
// c = r_p = s_q, and k meets s exactly in k_p = s_q.
double m2_oracle(const DistributionModel& model, const UStatSpec& spec) {
  const int n = model.size();
  const auto tuples = ordered_tuples(n, 2);
  auto meet = [](const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    for (int v : a)
      if (std::find(b.begin(), b.end(), v) != b.end()) out.push_back(v);
    return out;
  };
  double best = 0.0;
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      for (const auto& r : tuples)
        for (const auto& s : tuples) {
          const auto rs = meet(r, s);
          if (rs.size() != 1 || rs[0] != r[p] || rs[0] != s[q]) continue;
          const double er = joint_product_moment(model, spec, r, s);
          for (const auto& k : tuples) {
            const auto ks = meet(k, s);
            if (ks.size() != 1 || ks[0] != k[p] || ks[0] != s[q]) continue;
            best = std::max(best, std::abs(er - joint_product_moment(model, spec, k, s)));
          }
        }
  return best;
}

}  // namespace

TEST(AverageWeight, ApPairFamilyAtFour) {
  const auto w = average_weight(ap_spec(), 4, 2, 2);
  EXPECT_NEAR(w.value, 11.0 / 6.0, 1e-14);
}

TEST(AverageWeight, KendallPairFamilyAtFour) {
  EXPECT_NEAR(average_weight(kendall_spec(), 4, 2, 2).value, 3.0 / 8.0, 1e-15);
  EXPECT_NEAR(average_weight(kendall_spec(), 4, 2, 2, Normalization::power_of_n, WeightMethod::enumerate).value,
              3.0 / 8.0, 1e-15);
}

TEST(AverageWeight, ConstantWeight) {
  for (int n : {2, 4, 7}) {
    EXPECT_NEAR(average_weight(constant_weight_spec(), n, 2, 2).value, 2.0 * (n - 1) / n, 1e-14);
    EXPECT_NEAR(
        average_weight(constant_weight_spec(), n, 2, 2, Normalization::power_of_n, WeightMethod::enumerate).value,
        2.0 * (n - 1) / n, 1e-14);
  }
}

TEST(AverageWeight, ApHarmonicFormMatchesEnumerationUpToForty) {
  for (int n = 2; n <= 40; ++n) {
    const double expected = harmonic(n - 1);
    const auto closed = average_weight(ap_spec(), n, 2, 2);
    const auto enumerated = average_weight(ap_spec(), n, 2, 2, Normalization::power_of_n, WeightMethod::enumerate);
    EXPECT_NEAR(closed.value, expected, 1e-12) << n;
    EXPECT_NEAR(enumerated.value, expected, 1e-12) << n;
  }
}

TEST(AverageWeight, ClosedFormsMatchNaiveEnumeration) {
  for (const auto& spec : {ap_spec(), kendall_spec(), constant_weight_spec()})
    for (int n : {2, 3, 5, 8})
      for (auto [K, q] : {std::pair{2, 0}, {2, 1}, {2, 2}, {3, 0}, {3, 1}, {3, 2}}) {
        if (K == 3 && q == 0 && n == 8) continue;
        const auto [total, card] = naive_family(spec, n, K, q);
        const auto w = average_weight(spec, n, K, q);
        EXPECT_NEAR(w.total, total, 1e-10 * std::max(1.0, total)) << n << K << q;
        EXPECT_EQ(w.cardinality, card) << n << K << q;
      }
}

TEST(AverageWeight, ApTripleFamilyClosedFormVersusEnumeration) {
  const auto closed = average_weight(ap_spec(), 8, 3, 1);
  const auto enumerated = average_weight(ap_spec(), 8, 3, 1, Normalization::power_of_n, WeightMethod::enumerate);
  EXPECT_NEAR(closed.value, enumerated.value, 1e-12);
  EXPECT_EQ(closed.cardinality, enumerated.cardinality);
  EXPECT_EQ(closed.cardinality, 8.0 * 8 * 7 * 7 * 7 - 8.0 * 28);
}

TEST(AverageWeight, DegreeThreeAgreesWithNaive) {
  Generator g(Stream(3));
  for (int rep = 0; rep < 4; ++rep) {
    const auto spec = random_spec(g, 3);
    for (auto [K, q] : {std::pair{2, 1}, {2, 2}, {2, 3}}) {
      const auto [total, card] = naive_family(spec, 5, K, q);
      const auto w = average_weight(spec, 5, K, q);
      EXPECT_NEAR(w.total, total, 1e-10 * std::max(1.0, total));
      EXPECT_EQ(w.cardinality, card);
    }
  }
}

TEST(AverageWeight, NormalizationConversionIsExact) {
  Generator g(Stream(9));
  for (int m : {2, 3})
    for (int n : {3, 4, 6}) {
      const auto spec = random_spec(g, m);
      for (int q = 0; q <= m; ++q) {
        const int K = 2;
        if (std::pow(n, q + K * (m - q)) > 1e6) continue;
        const auto a = average_weight(spec, n, K, q, Normalization::power_of_n);
        const auto b = average_weight(spec, n, K, q, Normalization::exact_cardinality);
        EXPECT_DOUBLE_EQ(a.total, b.total);
        EXPECT_NEAR(b.value * b.cardinality, a.value * std::pow(n, q + K * (m - q)), 1e-12 * a.total);
        EXPECT_GE(a.value, 0.0);
      }
    }
}

TEST(AverageWeight, Preconditions) {
  EXPECT_THROW(average_weight(ap_spec(), 4, 1, 1), InvalidInput);
  EXPECT_THROW(average_weight(ap_spec(), 4, 2, 3), InvalidInput);
  EXPECT_THROW(average_weight(ap_spec(), 1, 2, 1), InvalidInput);
  EXPECT_THROW(average_weight(ap_spec(), 200, 3, 1, Normalization::power_of_n, WeightMethod::enumerate), SizeError);
  Generator g(Stream(1));
  EXPECT_THROW(average_weight(random_spec(g, 3), 60, 3, 1), SizeError);
}

TEST(SumWeightIdentity, Examples) {
  EXPECT_NEAR(sum_weight_identity(2), 2.0, 1e-15);
  EXPECT_NEAR(sum_weight_identity(4), 29.0 / 6.0, 1e-14);
  EXPECT_NEAR(sum_weight_identity(10), 9.0 + harmonic(9), 1e-13);
  EXPECT_NEAR(sum_weight_identity(10), 11.828968, 1e-6);
  EXPECT_THROW(sum_weight_identity(1), InvalidInput);
}

TEST(SumWeightIdentity, MatchesTripleSumUpToForty) {
  auto g = [](int i, int j) -> long double {
    if (j < i) return 1.0L / (i - 1);
    if (j > i) return -1.0L / (j - 1);
    return 0.0L;
  };
  for (int n = 2; n <= 40; ++n) {
    long double triple = 0.0L;
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        for (int k = 1; k <= n; ++k) triple += g(i, j) * g(i, k);
    EXPECT_NEAR(sum_weight_identity(n), static_cast<double>(triple), 1e-12) << n;
    EXPECT_NEAR(sum_weight_identity(n), (n - 1) + harmonic(n - 1), 1e-12) << n;
  }
}

TEST(HarmonicSum, LogBounds) {
  for (int n = 1; n <= 5000; ++n) {
    const double phi = harmonic(n);
    EXPECT_LE(std::log(n + 1.0), phi + 1e-15);
    EXPECT_LE(phi, 1.0 + std::log(n) + 1e-15);
  }
}

TEST(Heterogeneity, IdenticalMarginalsGiveZero) {
  auto d = DistributionModel::discrete(std::vector<DiscreteLaw>(5, uniform_law({0, 1, 3})));
  for (const auto& spec : {kendall_spec(), ap_spec()}) {
    DecompContext ctx(d, spec);
    const auto h = heterogeneity_measures(ctx);
    EXPECT_EQ(h.M1, 0.0);
    EXPECT_EQ(h.M2, 0.0);
  }
  auto g = make_scenario(ScenarioFamily::gaussian, 6, 0.0);
  const auto h = heterogeneity_measures(DecompContext(g, kendall_spec()));
  EXPECT_EQ(h.M1, 0.0);
  EXPECT_EQ(h.M2, 0.0);
}

TEST(Heterogeneity, GaussianTwoPointM1) {
  auto g = DistributionModel::gaussian({0.0, 2.0});
  const auto h = heterogeneity_measures(DecompContext(g, kendall_spec()));
  const double expected = normal_cdf(std::sqrt(2.0)) - normal_cdf(-std::sqrt(2.0));
  EXPECT_NEAR(h.M1, expected, 1e-12);
  EXPECT_NEAR(h.M1, 0.84270, 1e-5);
}

TEST(Heterogeneity, DiscreteAgainstBruteForce) {
  auto two_point = DistributionModel::discrete({uniform_law({0, 1}), uniform_law({0, 2}), uniform_law({1, 3})});
  const auto h3 = heterogeneity_measures(DecompContext(two_point, kendall_spec()));
  EXPECT_EQ(h3.M2, 0.0);
  EXPECT_NEAR(h3.M2, m2_oracle(two_point, kendall_spec()), 1e-15);

  Generator g(Stream(44));
  for (int rep = 0; rep < 6; ++rep) {
    auto model = random_discrete_model(g, 4 + rep % 2);
    for (const auto& spec : {kendall_spec(), ap_spec(), random_spec(g, 2)}) {
      DecompContext ctx(model, spec);
      const auto h = heterogeneity_measures(ctx);
      EXPECT_NEAR(h.M2, m2_oracle(model, spec), 1e-12);
      double lo = 1e300, hi = -1e300;
      for (const auto& t : ordered_tuples(model.size(), 2)) {
        const double theta = ctx.theta(t);
        lo = std::min(lo, theta);
        hi = std::max(hi, theta);
      }
      EXPECT_NEAR(h.M1, hi - lo, 1e-14);
    }
  }
}

TEST(Heterogeneity, Guards) {
  auto big = make_scenario(ScenarioFamily::gaussian, 201, 1.0);
  EXPECT_THROW(heterogeneity_measures(DecompContext(big, kendall_spec())), SizeError);
  Generator g(Stream(2));
  auto d = random_discrete_model(g, 4);
  EXPECT_THROW(heterogeneity_measures(DecompContext(d, random_spec(g, 3))), Unsupported);
}

TEST(ConditionReport, IidKendall) {
  const int n = 100;
  auto iid = make_scenario(ScenarioFamily::gaussian, n, 0.0);
  DecompContext ctx(iid, kendall_spec());
  const auto r = condition_report(ctx);
  EXPECT_EQ(r.M, 1.0);
  EXPECT_TRUE(r.sigma2_from_main_term);
  EXPECT_NEAR(r.V, iid_kendall_main_variance(n), 1e-12);
  // Leading term 1/(36 n) on the U scale; tau = 4U - 1 has main-term variance 4/(9 n).
  EXPECT_NEAR(r.V * 36.0 * n, 1.0, 0.03);
  EXPECT_NEAR(r.A22, 0.5 * (n - 1) / n, 1e-14);
  EXPECT_EQ(r.M1, 0.0);
  EXPECT_EQ(r.M2, 0.0);
  const double V = iid_kendall_main_variance(n);
  EXPECT_NEAR(r.ratio13, r.A22 / (double(n) * n * V), 1e-12 * r.ratio13);
  EXPECT_NEAR(r.ratio14, r.A31 / (double(n) * n * std::pow(V, 1.5)), 1e-12 * r.ratio14);
  EXPECT_NEAR(r.ratio_boot, r.A21 * (1.0 / n) / (n * V), 1e-12 * r.ratio_boot);
  for (double v : {r.ratio13, r.ratio14, r.ratio_boot, r.A21, r.A31}) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
}

TEST(ConditionReport, SuppliedSigmaAndGenericKernel) {
  Generator g(Stream(61));
  auto model = random_discrete_model(g, 5);
  UStatSpec spec = random_spec(g, 2);
  DecompContext ctx(model, spec);
  const auto r = condition_report(ctx, 0.25);
  EXPECT_FALSE(r.sigma2_from_main_term);
  EXPECT_EQ(r.sigma2, 0.25);
  double M = 0.0;
  for (const auto& t : ordered_tuples(5, 2)) {
    UStatSpec sq = spec;
    sq.kernel = [&](std::span<const double> x) { return spec.kernel(x) * spec.kernel(x); };
    M = std::max(M, joint_product_moment(model, sq, t, t));
  }
  EXPECT_NEAR(r.M, M, 1e-12 * M);
  EXPECT_NEAR(r.ratio_boot, r.A21 * (r.M1 * r.M1 + r.M2 + 0.2) / (5 * 0.25), 1e-12 * r.ratio_boot);
}

TEST(ConditionReport, DegenerateStatistic) {
  auto d = DistributionModel::discrete(std::vector<DiscreteLaw>(4, uniform_law({1.0})));
  EXPECT_THROW(condition_report(DecompContext(d, kendall_spec())), DegenerateError);
}
