#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "wustat/core.hpp"
#include "wustat/errors.hpp"
#include "wustat/rng.hpp"

using namespace wustat;

namespace {

// Direct double loop over j < i.
double kendall_oracle(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  long count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) count += x[j] > x[i];
  return static_cast<double>(count) / (static_cast<double>(n) * (n - 1));
}

std::vector<double> random_sample(Generator& g, int n, bool with_ties) {
  std::vector<double> x(n);
  for (auto& v : x) v = with_ties ? static_cast<double>(g.below(4)) : g.normal();
  return x;
}

}  // namespace

TEST(EvalWeightedUstat, SmallExamples) {
  const std::vector<double> x{2.0, 1.0, 3.0};
  EXPECT_NEAR(eval_weighted_ustat(x, kendall_spec()), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(eval_weighted_ustat(x, ap_spec()), 0.5, 1e-15);
  EXPECT_NEAR(eval_weighted_ustat(std::vector<double>{4, 3, 2, 1}, kendall_spec()), 0.5, 1e-15);
}

TEST(EvalWeightedUstat, Errors) {
  EXPECT_THROW(eval_weighted_ustat(std::vector<double>{1.0}, kendall_spec()), InvalidInput);
  EXPECT_THROW(eval_weighted_ustat(std::vector<double>{1.0, NAN}, kendall_spec()), InvalidInput);
  std::vector<double> big(20000, 1.0);
  EXPECT_THROW(eval_weighted_ustat(big, kendall_spec()), SizeError);
}

TEST(RankStatistics, Examples) {
  const std::vector<double> x{2.0, 1.0, 3.0};
  EXPECT_DOUBLE_EQ(kendall_u(x), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(ap_u(x), 0.5);
  for (int n : {2, 5, 17}) {
    std::vector<double> up(n), down(n), flat(n, 3.0);
    for (int i = 0; i < n; ++i) {
      up[i] = i;
      down[i] = -i;
    }
    EXPECT_EQ(kendall_u(up), 0.0);
    EXPECT_EQ(ap_u(up), 0.0);
    EXPECT_DOUBLE_EQ(ap_u(down), 1.0);
    EXPECT_DOUBLE_EQ(kendall_u(down), 0.5);
    EXPECT_EQ(kendall_u(flat), 0.0);
    EXPECT_EQ(ap_u(flat), 0.0);
  }
  EXPECT_THROW(kendall_u(std::vector<double>{1.0}), InvalidInput);
  EXPECT_THROW(ap_u(std::vector<double>{1.0}), InvalidInput);
}

TEST(RankStatistics, TauTransform) {
  EXPECT_DOUBLE_EQ(tau_from_u(RankStatKind::kendall, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(tau_from_u(RankStatKind::kendall, 1.0 / 6.0), -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(tau_from_u(RankStatKind::ap, 0.5), 0.0);
  EXPECT_THROW(tau_from_u(RankStatKind::ap, 1.5), RangeError);
  EXPECT_THROW(tau_from_u(RankStatKind::kendall, -0.1), RangeError);
}

TEST(RankStatistics, FastMatchesNaiveOnRandomSamples) {
  Generator g(Stream(2024));
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(g.below(8));
    const auto x = random_sample(g, n, rep % 3 == 0);
    EXPECT_NEAR(kendall_u(x), eval_weighted_ustat(x, kendall_spec()), 1e-12);
    EXPECT_NEAR(ap_u(x), eval_weighted_ustat(x, ap_spec()), 1e-12);
    EXPECT_NEAR(kendall_u(x), kendall_oracle(x), 1e-15);
  }
}

TEST(RankStatistics, MatchOracleAtLargerN) {
  Generator g(Stream(7));
  for (int n : {50, 333, 1000}) {
    const auto x = random_sample(g, n, n == 333);
    EXPECT_NEAR(kendall_u(x), kendall_oracle(x), 1e-14);
  }
}

TEST(RankStatistics, MonotoneInvarianceAndRange) {
  Generator g(Stream(99));
  RankWorkspace ws;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(g.below(40));
    auto x = random_sample(g, n, rep % 2 == 0);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = std::exp(x[i]) * 3.0 + 1.0;
    EXPECT_EQ(kendall_u(x), kendall_u(y));
    EXPECT_EQ(ap_u(x), ap_u(y));
    EXPECT_EQ(ws.kendall(x), kendall_u(x));
    EXPECT_EQ(ws.ap(x), ap_u(x));
    for (auto kind : {RankStatKind::kendall, RankStatKind::ap}) {
      const double u = rank_u(kind, x);
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, 1.0);
      const double tau = tau_from_u(kind, u);
      EXPECT_GE(tau, -1.0);
      EXPECT_LE(tau, 1.0);
    }
  }
}

TEST(EvalWeightedUstat, KernelLinearityDegreeThree) {
  UStatSpec spec;
  spec.degree = 3;
  spec.weight = [](std::span<const int> t, int n) { return (t[0] + 2.0 * t[1] - t[2]) / n; };
  spec.kernel = [](std::span<const double> v) { return v[0] * v[1] - v[2] * v[2] + v[0]; };
  UStatSpec scaled = spec;
  scaled.kernel = [k = spec.kernel](std::span<const double> v) { return -2.5 * k(v); };
  Generator g(Stream(3));
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = random_sample(g, 3 + static_cast<int>(g.below(5)), false);
    const double a = eval_weighted_ustat(x, spec);
    EXPECT_NEAR(eval_weighted_ustat(x, scaled), -2.5 * a, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(EvalWeightedUstat, DegreeOneIsWeightedMean) {
  UStatSpec spec;
  spec.degree = 1;
  spec.weight = [](std::span<const int> t, int) { return static_cast<double>(t[0]); };
  spec.kernel = [](std::span<const double> v) { return v[0]; };
  const std::vector<double> x{1.0, 2.0, 3.0};
  EXPECT_NEAR(eval_weighted_ustat(x, spec), (1 + 4 + 9) / 3.0, 1e-14);
}

TEST(RankStatKind, ParseRoundTrip) {
  for (auto k : {RankStatKind::kendall, RankStatKind::ap}) EXPECT_EQ(parse_rank_stat(to_string(k)), k);
  EXPECT_THROW(parse_rank_stat("spearman"), InvalidInput);
}
