#include <gtest/gtest.h>

#include <boost/math/distributions/non_central_t.hpp>
#include <cmath>
#include <numbers>

#include "wustat/distributions.hpp"

using namespace wustat;

TEST(Scenario, EquallySpacedLocations) {
  auto g = make_scenario(ScenarioFamily::gaussian, 3, 2.0);
  EXPECT_EQ(g.family(), Family::gaussian_location);
  EXPECT_DOUBLE_EQ(g.location(1), 2.0);
  EXPECT_DOUBLE_EQ(g.location(2), 1.0);
  EXPECT_DOUBLE_EQ(g.location(3), 0.0);
  EXPECT_DOUBLE_EQ(g.scale(2), 1.0);

  auto t = make_scenario(ScenarioFamily::t5, 4, 3.0);
  EXPECT_EQ(t.df(), 5.0);
  for (int i = 1; i <= 4; ++i) EXPECT_DOUBLE_EQ(t.location(i), 4.0 - i);

  auto iid = make_scenario(ScenarioFamily::gaussian, 10, 0.0);
  EXPECT_TRUE(iid.identical_marginals());
  EXPECT_THROW(make_scenario(ScenarioFamily::gaussian, 5, -1.0), RangeError);
  EXPECT_THROW(make_scenario(ScenarioFamily::gaussian, 1, 1.0), InvalidInput);
}

TEST(Model, Validation) {
  EXPECT_THROW(DistributionModel::gaussian({0.0, 1.0}, {1.0, 0.0}), InvalidInput);
  EXPECT_THROW(DistributionModel::discrete({{{0.0, 1.0}, {0.5, 0.4}}}), InvalidInput);
  EXPECT_THROW(DistributionModel::discrete({{{0.0, 1.0}, {0.5}}}), InvalidInput);
  EXPECT_THROW(DistributionModel::noncentral_t({0.0}, -1.0), InvalidInput);
  auto m = DistributionModel::gaussian({0.0});
  EXPECT_THROW(m.survival(2, 0.0), InvalidInput);
}

TEST(Survival, GaussianExamples) {
  auto m = DistributionModel::gaussian({0.0, 1.5});
  EXPECT_DOUBLE_EQ(m.survival(2, 1.5), 0.5);
  EXPECT_NEAR(m.survival(1, 1.959963984540054), 0.025, 1e-12);
  EXPECT_NEAR(m.cdf_below(1, -1.959963984540054), 0.025, 1e-12);
}

TEST(Survival, DiscreteIsStrict) {
  auto m = DistributionModel::discrete({uniform_law({1.0, 2.0, 3.0})});
  EXPECT_NEAR(m.survival(1, 2.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.cdf_below(1, 2.0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.survival(1, 1.5), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.mean(1), 2.0, 1e-15);
  EXPECT_NEAR(m.sd(1), std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(NoncentralT, AgreesWithReferenceImplementation) {
  for (double delta : {0.0, 0.7, 3.0}) {
    boost::math::non_central_t_distribution<double> ref(5.0, delta);
    for (double x : {-4.0, -1.0, 0.0, 0.5, 2.0, 3.0, 6.0, 15.0}) {
      EXPECT_NEAR(noncentral_t_survival(x, 5.0, delta), boost::math::cdf(boost::math::complement(ref, x)), 1e-9)
          << delta << " " << x;
      EXPECT_NEAR(noncentral_t_density(x, 5.0, delta), boost::math::pdf(ref, x), 1e-9) << delta << " " << x;
    }
    EXPECT_NEAR(noncentral_t_mean(5.0, delta), boost::math::mean(ref), 1e-12);
    EXPECT_NEAR(noncentral_t_variance(5.0, delta), boost::math::variance(ref), 1e-10);
  }
  EXPECT_DOUBLE_EQ(noncentral_t_survival(0.0, 5.0, 0.0), 0.5);
  EXPECT_THROW(noncentral_t_variance(2.0, 0.0), Unsupported);
}

TEST(NoncentralT, FarTailsAreRelativelyAccurate) {
  boost::math::non_central_t_distribution<double> ref(5.0, 1.5);
  for (double x : {50.0, 200.0, 1000.0}) {
    const double s = boost::math::cdf(boost::math::complement(ref, x));
    EXPECT_NEAR(noncentral_t_survival(x, 5.0, 1.5), s, 1e-8 * s) << x;
    const double d = boost::math::pdf(ref, x);
    EXPECT_NEAR(noncentral_t_density(x, 5.0, 1.5), d, 1e-8 * d) << x;
  }
}

TEST(NoncentralT, ScaledModel) {
  auto m = DistributionModel::noncentral_t({1.0}, 5.0, {2.0});
  boost::math::non_central_t_distribution<double> ref(5.0, 1.0);
  EXPECT_NEAR(m.survival(1, 3.0), boost::math::cdf(boost::math::complement(ref, 1.5)), 1e-9);
  EXPECT_NEAR(m.density(1, 3.0), boost::math::pdf(ref, 1.5) / 2.0, 1e-9);
  EXPECT_NEAR(m.mean(1), 2.0 * boost::math::mean(ref), 1e-12);
  EXPECT_NEAR(m.sd(1), 2.0 * boost::math::standard_deviation(ref), 1e-10);
}

TEST(Theta, GaussianClosedForm) {
  auto m = DistributionModel::gaussian({2.0, 0.0});
  EXPECT_NEAR(pair_theta(m, 2, 1), normal_cdf(std::numbers::sqrt2), 1e-15);
  EXPECT_NEAR(pair_theta(m, 2, 1), 0.92135, 1e-5);
  auto table = pairwise_theta(make_scenario(ScenarioFamily::gaussian, 6, 0.0));
  for (int i = 1; i <= 6; ++i)
    for (int j = 1; j <= 6; ++j) EXPECT_DOUBLE_EQ(table(i, j), 0.5);
}

TEST(Theta, DiscreteBruteForce) {
  auto m = DistributionModel::discrete({uniform_law({0, 1}), uniform_law({0, 1, 2})});
  // Outcomes with X_2 > X_1: (0,1), (0,2), (1,2) out of 6.
  EXPECT_NEAR(pair_theta(m, 1, 2), 0.5, 1e-15);
  // Outcomes with X_1 > X_2: (1,0) only.
  EXPECT_NEAR(pair_theta(m, 2, 1), 1.0 / 6.0, 1e-15);
}

TEST(Theta, TAgreesWithSurvivalIntegral) {
  auto m = DistributionModel::noncentral_t({2.0, 0.5, 0.0}, 5.0, {1.0, 1.0, 2.0});
  for (auto [i, j] : {std::pair{1, 2}, std::pair{2, 1}, std::pair{3, 1}, std::pair{2, 3}}) {
    boost::math::non_central_t_distribution<double> pi(5.0, m.location(i)), pj(5.0, m.location(j));
    const double si = m.scale(i), sj = m.scale(j);
    auto f = [&](double x) {
      return boost::math::pdf(pi, x / si) / si * boost::math::cdf(boost::math::complement(pj, x / sj));
    };
    QuadratureOptions opt;
    opt.abs_tol = 1e-10;
    const double oracle = integrate(f, -INFINITY, INFINITY, opt).value;
    EXPECT_NEAR(pair_theta(m, i, j), oracle, 1e-8) << i << "," << j;
  }
  const auto table = pairwise_theta(m);
  for (int i = 1; i <= 3; ++i)
    for (int j = 1; j <= 3; ++j) EXPECT_NEAR(table(i, j) + table(j, i), 1.0, 1e-8);
}

TEST(SurvivalTable, MatchesDirectEvaluation) {
  auto m = make_scenario(ScenarioFamily::t5, 3, 3.0);
  SurvivalTable table(m);
  for (int i = 1; i <= 3; ++i)
    for (double x = -8.0; x <= 20.0; x += 0.37) EXPECT_NEAR(table(i, x), m.survival(i, x), 2e-8) << i << " " << x;
  EXPECT_NEAR(table(1, 500.0), m.survival(1, 500.0), 1e-12);
}

TEST(ExpectationRule, ReproducesMoments) {
  for (auto m : {DistributionModel::gaussian({1.0}, {2.0}), DistributionModel::noncentral_t({1.5}, 5.0),
                 DistributionModel::discrete({DiscreteLaw{{-1.0, 4.0}, {0.3, 0.7}}})}) {
    const auto rule = m.expectation_rule(1);
    double m0 = 0, m1 = 0, m2 = 0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      m0 += rule.weights[k];
      m1 += rule.weights[k] * rule.nodes[k];
      m2 += rule.weights[k] * rule.nodes[k] * rule.nodes[k];
    }
    EXPECT_NEAR(m0, 1.0, 1e-12);
    EXPECT_NEAR(m1, m.mean(1), 1e-7);
    EXPECT_NEAR(m2 - m1 * m1, m.sd(1) * m.sd(1), 1e-5);
  }
}

TEST(Expect, MatchesClosedForms) {
  auto g = DistributionModel::gaussian({1.0}, {2.0});
  EXPECT_NEAR(g.expect(1, [](double x) { return x * x; }), 5.0, 1e-9);
  auto t = DistributionModel::noncentral_t({1.0}, 5.0);
  EXPECT_NEAR(t.expect(1, [](double x) { return x; }), t.mean(1), 1e-8);
}

TEST(Sampler, ExceedanceFrequenciesMatchSurvival) {
  const int draws = 1000000;
  std::vector<DistributionModel> models{
      DistributionModel::gaussian({0.5}, {1.5}), DistributionModel::noncentral_t({1.0}, 5.0),
      DistributionModel::discrete({DiscreteLaw{{0.0, 1.0, 2.5}, {0.2, 0.5, 0.3}}})};
  const std::vector<double> probes{-1.0, 0.0, 0.7, 1.8, 3.5};
  std::uint64_t seed = 1;
  for (const auto& m : models) {
    Generator gen(Stream(seed++));
    std::vector<int> counts(probes.size(), 0);
    for (int k = 0; k < draws; ++k) {
      const double x = m.sample(1, gen);
      for (std::size_t p = 0; p < probes.size(); ++p) counts[p] += x > probes[p];
    }
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double s = m.survival(1, probes[p]);
      const double se = std::sqrt(s * (1 - s) / draws);
      EXPECT_NEAR(static_cast<double>(counts[p]) / draws, s, 4.0 * se + 1e-12) << to_string(m.family());
    }
  }
}

TEST(ModelBlock, JsonRoundTrip) {
  ScenarioModelBlock b{ScenarioFamily::t5, 40, 1.25, 5.0, 77};
  const auto back = ScenarioModelBlock::from_json(b.to_json());
  EXPECT_EQ(back, b);
  EXPECT_EQ(back.build().size(), 40);
  EXPECT_THROW(ScenarioModelBlock::from_json("{\"family\": \"gaussian\"}"), ConfigError);
  EXPECT_THROW(ScenarioModelBlock::from_json("{\"family\": \"cauchy\", \"n\": 3, \"Rn\": 1}"), InvalidInput);
}

TEST(Xi, Values) {
  EXPECT_EQ(xi(0.5), 1.0);
  EXPECT_EQ(xi(1.0), 1.0);
  EXPECT_EQ(xi(3.0), 4.0);
  EXPECT_THROW(xi(0.0), RangeError);
}

TEST(Xi, PowerInequality) {
  Generator g(Stream(31));
  for (int k = 0; k < 1000; ++k) {
    const double a = 10.0 * g.uniform(), b = 10.0 * g.uniform(), p = 0.05 + 5.0 * g.uniform();
    EXPECT_LE(std::pow(a + b, p), xi(p) * (std::pow(a, p) + std::pow(b, p)) * (1 + 1e-12));
  }
}

TEST(TailDiagnostics, IdenticalMarginals) {
  auto m = make_scenario(ScenarioFamily::gaussian, 50, 0.0);
  const auto d = tail_diagnostics(m, {});
  EXPECT_EQ(d.rn, 0.0);
  EXPECT_EQ(d.rho_n, 1.0);
}

TEST(TailDiagnostics, LightTailConstants) {
  TailParameters p;
  p.regime = TailRegime::light;
  p.b1 = 0.5;
  p.b2 = 0.25;
  p.lambda = 2.0;
  p.c1 = 0.05;
  p.c2 = 1.0;
  p.t0 = 1.0;
  auto m = make_scenario(ScenarioFamily::gaussian, 200, 0.3);
  const auto d = tail_diagnostics(m, p);
  EXPECT_NEAR(d.k4, std::sqrt(2.0), 1e-15);
  const double base = -std::log(0.05 / 2.0) / 0.25;
  EXPECT_NEAR(d.k3, 1.0 + std::sqrt(base + 2.0) + std::sqrt(base), 1e-12);
  EXPECT_NEAR(d.rn, 0.3, 1e-15);
  EXPECT_NEAR(d.lhs, 3 * 0.5 * 0.09 + 0.5 * std::pow(0.3 + d.k3 + d.k4 * 0.3, 2.0), 1e-12);
  EXPECT_NEAR(d.rhs_kendall, std::log(200.0) / 3.0, 1e-15);
  EXPECT_NEAR(d.rhs_ap, std::log(200.0) / 3.0 - 2.0 * std::log(std::log(200.0)), 1e-15);
  EXPECT_EQ(d.satisfied_kendall, d.lhs < d.rhs_kendall);
  // Mills-ratio bounds put the standard normal tail between 0.05 e^{-t^2/2}
  // and e^{-t^2/4} for t >= 1.
  EXPECT_TRUE(d.tail_bounds_hold);
  p.c1 = 3.0;
  EXPECT_THROW(tail_diagnostics(m, p), InvalidInput);
}

TEST(TailDiagnostics, GaussianRateBound) {
  for (int n : {100, 1000, 100000}) {
    const double expected = std::sqrt(2.0 * std::log(n) / (27.0 + 12.0 * std::sqrt(2.0)));
    EXPECT_NEAR(light_tail_rn_bound(n, 0.5, 2.0, std::sqrt(2.0)), expected, 1e-14);
  }
}

TEST(TailDiagnostics, HeavyRegime) {
  TailParameters p;
  p.regime = TailRegime::heavy;
  p.b1 = 6.0;
  p.b2 = 4.0;
  p.c1 = 1e-4;
  p.c2 = 10.0;
  p.t0 = 1.0;
  auto m = make_scenario(ScenarioFamily::t5, 20, 1.0);
  const auto d = tail_diagnostics(m, p);
  EXPECT_NEAR(d.lhs, std::pow(d.rn, (3 * 6.0 * 4.0 + 36.0) / 4.0) * std::pow(d.rho_n, 6.0), 1e-9 * d.lhs);
  EXPECT_NEAR(d.rhs_kendall, std::cbrt(20.0), 1e-14);
  EXPECT_NEAR(d.rhs_ap, std::cbrt(20.0) / std::pow(std::log(20.0), 2), 1e-14);
  EXPECT_GE(d.rho_n, 1.0);
  p.b2 = 7.0;
  EXPECT_THROW(tail_diagnostics(m, p), InvalidInput);
}
