#pragma once

// Triangular-array data models: one marginal law per index position.
// All index arguments are 1-based, matching the weight-function convention.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wustat/errors.hpp"
#include "wustat/normal.hpp"
#include "wustat/numeric.hpp"
#include "wustat/quadrature.hpp"
#include "wustat/rng.hpp"

namespace wustat {

enum class Family { gaussian_location, t_location, discrete };

std::string to_string(Family family);

struct DiscreteLaw {
  std::vector<double> support;
  std::vector<double> probabilities;
};

/// Uniform law on the given points.
DiscreteLaw uniform_law(std::vector<double> support);

class DistributionModel {
 public:
  /// X_i ~ N(means_i, scales_i^2); empty `scales` means unit scales.
  static DistributionModel gaussian(std::vector<double> means, std::vector<double> scales = {});
  /// X_i = scales_i * (Z + delta_i) / sqrt(V / df), V ~ chi^2_df.
  static DistributionModel noncentral_t(std::vector<double> noncentralities, double df,
                                        std::vector<double> scales = {});
  static DistributionModel discrete(std::vector<DiscreteLaw> laws);

  int size() const noexcept { return static_cast<int>(location_.size()); }
  Family family() const noexcept { return family_; }
  bool continuous() const noexcept { return family_ != Family::discrete; }
  bool identical_marginals() const;

  /// Mean parameter (Gaussian) or noncentrality (t); unused for discrete.
  double location(int i) const { return location_.at(i - 1); }
  double scale(int i) const { return scale_.at(i - 1); }
  double df() const noexcept { return df_; }
  const DiscreteLaw& law(int i) const { return laws_.at(i - 1); }

  double mean(int i) const;
  double sd(int i) const;

  /// P(X_i > x).
  double survival(int i, double x) const;
  /// P(X_i < x).
  double cdf_below(int i, double x) const;
  /// Lebesgue density; continuous families only.
  double density(int i, double x) const;

  /// E f(X_i): finite sum for discrete laws, adaptive quadrature otherwise.
  template <class F>
  double expect(int i, F&& f, const QuadratureOptions& opt) const;
  template <class F>
  double expect(int i, F&& f, double abs_tol = 1e-10) const {
    QuadratureOptions opt;
    opt.abs_tol = abs_tol;
    return expect(i, std::forward<F>(f), opt);
  }

  /// Fixed rule (nodes in x, probability weights) for smooth integrands.
  QuadratureRule expectation_rule(int i) const;

  double sample(int i, Generator& gen) const;
  void sample_row(Generator& gen, std::span<double> out) const;
  std::vector<double> sample_row(Generator& gen) const;

 private:
  DistributionModel() = default;
  void check_index(int i) const;

  Family family_ = Family::gaussian_location;
  std::vector<double> location_;
  std::vector<double> scale_;
  double df_ = 0.0;
  std::vector<DiscreteLaw> laws_;
};

/// Survival and density of the standard noncentral t by quadrature over the
/// chi-square mixing variable: absolute tolerance `abs_tol`, tightened to a
/// relative 1e-11 for small tail values.
double noncentral_t_survival(double x, double df, double delta, double abs_tol = 1e-10);
double noncentral_t_density(double x, double df, double delta, double abs_tol = 1e-10);
double noncentral_t_mean(double df, double delta);
double noncentral_t_variance(double df, double delta);

/// n x n table of theta(i, j) = P(X_j > X_i), 1-based access.
class ThetaTable {
 public:
  ThetaTable() = default;
  explicit ThetaTable(int n) : n_(n), data_(static_cast<std::size_t>(n) * n, 0.0) {}
  int size() const noexcept { return n_; }
  double operator()(int i, int j) const noexcept { return data_[index(i, j)]; }
  double& operator()(int i, int j) noexcept { return data_[index(i, j)]; }

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i - 1) * n_ + static_cast<std::size_t>(j - 1);
  }
  int n_ = 0;
  std::vector<double> data_;
};

inline constexpr int kThetaTableGuard = 5000;

/// theta(i, j) = P(X_j > X_i) for one pair.
double pair_theta(const DistributionModel& model, int i, int j);

/// Full table; diagonal is 1/2 for continuous families.
ThetaTable pairwise_theta(const DistributionModel& model);

/// Survival lookup for hot loops. Gaussian and discrete models are evaluated
/// exactly; t models are tabulated on a grid and interpolated with cubic
/// Hermite segments (value and density), falling back to quadrature outside it.
class SurvivalTable {
 public:
  explicit SurvivalTable(const DistributionModel& model, double step = 0.05);
  double operator()(int i, double x) const;

 private:
  const DistributionModel* model_;
  double step_;
  std::vector<double> lo_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<double>> slopes_;
};

enum class ScenarioFamily { gaussian, t5 };

std::string to_string(ScenarioFamily family);
ScenarioFamily parse_scenario_family(const std::string& name);

/// Locations equally spaced from rn (index 1) down to 0 (index n), unit
/// scales; the t family uses 5 degrees of freedom. `seed` is carried for
/// provenance only: the model itself is deterministic.
DistributionModel make_scenario(ScenarioFamily family, int n, double rn, std::uint64_t seed = 0);

/// The JSON scenario block describing a model: {family, n, Rn, df, seed}.
struct ScenarioModelBlock {
  ScenarioFamily family = ScenarioFamily::gaussian;
  int n = 0;
  double rn = 0.0;
  double df = 5.0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static ScenarioModelBlock from_json(const std::string& text);
  DistributionModel build() const;
  friend bool operator==(const ScenarioModelBlock&, const ScenarioModelBlock&) = default;
};

/// xi(p) = 1 for p <= 1, 2^(p-1) otherwise.
double xi(double p);

enum class TailRegime { heavy, light };

struct TailParameters {
  TailRegime regime = TailRegime::light;
  double b1 = 0.5;
  double b2 = 0.25;
  double c1 = 0.1;
  double c2 = 1.0;
  double t0 = 1.0;
  double lambda = 2.0;
  /// Probe the standardized lower tail F_j(-t) instead of the upper tail.
  bool lower_tail = false;
};

struct TailDiagnostics {
  double rn = 0.0;
  double rho_n = 1.0;
  TailRegime regime = TailRegime::light;
  double b1 = 0, b2 = 0, c1 = 0, c2 = 0, t0 = 0, lambda = 0;
  double k3 = 0.0;
  double k4 = 0.0;
  /// Left-hand side of the rate condition at this n (shared by both statistics).
  double lhs = 0.0;
  double rhs_kendall = 0.0;
  double rhs_ap = 0.0;
  bool satisfied_kendall = false;
  bool satisfied_ap = false;
  /// Whether c1 g(t) <= F_j(t) <= c2 g(t) held at the probe points t >= t0.
  bool tail_bounds_hold = false;
};

TailDiagnostics tail_diagnostics(const DistributionModel& model, const TailParameters& params);

/// Sufficient light-tail bound on R_n for unit scales:
/// [log n / (3 b1 (3 + xi(lambda) (1 + K4)^lambda))]^(1/lambda).
double light_tail_rn_bound(int n, double b1, double lambda, double k4);

// ---------------------------------------------------------------------------

template <class F>
double DistributionModel::expect(int i, F&& f, const QuadratureOptions& opt) const {
  check_index(i);
  switch (family_) {
    case Family::discrete: {
      const auto& l = laws_[i - 1];
      CompensatedSum s;
      for (std::size_t k = 0; k < l.support.size(); ++k) s += l.probabilities[k] * f(l.support[k]);
      return s.value();
    }
    case Family::gaussian_location: {
      const double mu = location_[i - 1];
      const double sigma = scale_[i - 1];
      auto g = [&](double z) { return f(mu + sigma * z) * normal_pdf(z); };
      return integrate(g, -INFINITY, INFINITY, opt).value;
    }
    case Family::t_location: {
      auto g = [&](double x) {
        const double d = density(i, x);
        return d == 0.0 ? 0.0 : f(x) * d;
      };
      return integrate(g, -INFINITY, INFINITY, opt).value;
    }
  }
  return 0.0;
}

}  // namespace wustat
