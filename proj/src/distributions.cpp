#include "wustat/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

namespace wustat {
namespace {

double chi_square_log_density(double v, double df) {
  return (0.5 * df - 1.0) * std::log(v) - 0.5 * v - 0.5 * df * std::numbers::ln2 - std::lgamma(0.5 * df);
}

void check_scales(const std::vector<double>& scales) {
  for (double s : scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("scales must be positive and finite");
}

std::vector<double> unit_or(std::vector<double> scales, std::size_t n) {
  if (scales.empty()) return std::vector<double>(n, 1.0);
  if (scales.size() != n) throw InvalidInput("scales and locations differ in length");
  check_scales(scales);
  return scales;
}

// Tail values of the t laws are tiny but still matter once multiplied by
// polynomial moments, so the mixing integrals also get a relative target.
QuadratureOptions mixing_options(double abs_tol) {
  QuadratureOptions opt;
  opt.abs_tol = abs_tol * 1e-10;
  opt.rel_tol = 1e-11;
  return opt;
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::gaussian_location: return "gaussian_location";
    case Family::t_location: return "t_location";
    case Family::discrete: return "discrete";
  }
  return "unknown";
}

DiscreteLaw uniform_law(std::vector<double> support) {
  const auto k = support.size();
  return {std::move(support), std::vector<double>(k, 1.0 / static_cast<double>(k))};
}

DistributionModel DistributionModel::gaussian(std::vector<double> means, std::vector<double> scales) {
  if (means.empty()) throw InvalidInput("model needs at least one index");
  DistributionModel m;
  m.family_ = Family::gaussian_location;
  m.scale_ = unit_or(std::move(scales), means.size());
  m.location_ = std::move(means);
  return m;
}

DistributionModel DistributionModel::noncentral_t(std::vector<double> noncentralities, double df,
                                                  std::vector<double> scales) {
  if (noncentralities.empty()) throw InvalidInput("model needs at least one index");
  if (!(df > 0.0)) throw InvalidInput("degrees of freedom must be positive");
  DistributionModel m;
  m.family_ = Family::t_location;
  m.df_ = df;
  m.scale_ = unit_or(std::move(scales), noncentralities.size());
  m.location_ = std::move(noncentralities);
  return m;
}

DistributionModel DistributionModel::discrete(std::vector<DiscreteLaw> laws) {
  if (laws.empty()) throw InvalidInput("model needs at least one index");
  for (auto& law : laws) {
    if (law.support.empty() || law.support.size() != law.probabilities.size())
      throw InvalidInput("discrete law needs matching non-empty support and probabilities");
    CompensatedSum total;
    for (double p : law.probabilities) {
      if (!(p >= 0.0)) throw InvalidInput("discrete probabilities must be non-negative");
      total += p;
    }
    if (std::abs(total.value() - 1.0) > 1e-12) throw InvalidInput("discrete probabilities must sum to 1");
    for (double x : law.support)
      if (!std::isfinite(x)) throw InvalidInput("discrete support must be finite");
  }
  DistributionModel m;
  m.family_ = Family::discrete;
  m.location_.assign(laws.size(), 0.0);
  m.scale_.assign(laws.size(), 1.0);
  m.laws_ = std::move(laws);
  return m;
}

void DistributionModel::check_index(int i) const {
  if (i < 1 || i > size()) throw InvalidInput("index " + std::to_string(i) + " outside [1, n]");
}

bool DistributionModel::identical_marginals() const {
  for (int i = 1; i < size(); ++i) {
    if (family_ == Family::discrete) {
      if (laws_[i].support != laws_[0].support || laws_[i].probabilities != laws_[0].probabilities) return false;
    } else if (location_[i] != location_[0] || scale_[i] != scale_[0]) {
      return false;
    }
  }
  return true;
}

double noncentral_t_mean(double df, double delta) {
  if (!(df > 1.0)) throw Unsupported("noncentral t mean requires df > 1");
  return delta * std::sqrt(0.5 * df) * std::exp(std::lgamma(0.5 * (df - 1.0)) - std::lgamma(0.5 * df));
}

double noncentral_t_variance(double df, double delta) {
  if (!(df > 2.0)) throw Unsupported("noncentral t variance requires df > 2");
  const double mu = noncentral_t_mean(df, delta);
  return df * (1.0 + delta * delta) / (df - 2.0) - mu * mu;
}

// Both mixing integrals are written over u = x sqrt(V / df) once |x| > 1, so
// the mass stays at u = O(1) however far out x is; v = df (u / x)^2.
double noncentral_t_survival(double x, double df, double delta, double abs_tol) {
  // P(T > x) = E_V Phi(delta - x sqrt(V / df)).
  if (x == 0.0) return normal_cdf(delta);
  if (x < -1.0) return 1.0 - noncentral_t_survival(-x, df, -delta, abs_tol);
  const auto opt = mixing_options(abs_tol);
  double value = 0.0;
  if (x > 1.0) {
    auto integrand = [&](double u) {
      if (u <= 0.0) return 0.0;
      const double v = df * (u / x) * (u / x);
      return normal_cdf(delta - u) * std::exp(chi_square_log_density(v, df)) * 2.0 * df * u / (x * x);
    };
    value = integrate(integrand, 0.0, INFINITY, opt).value;
  } else {
    auto integrand = [&](double v) {
      if (v <= 0.0) return 0.0;
      return normal_cdf(delta - x * std::sqrt(v / df)) * std::exp(chi_square_log_density(v, df));
    };
    value = integrate(integrand, 0.0, INFINITY, opt).value;
  }
  return std::clamp(value, 0.0, 1.0);
}

double noncentral_t_density(double x, double df, double delta, double abs_tol) {
  // f(x) = E_V[ s * phi(x s - delta) ], s = sqrt(V / df).
  if (x < -1.0) return noncentral_t_density(-x, df, -delta, abs_tol);
  const auto opt = mixing_options(abs_tol);
  double value = 0.0;
  if (x > 1.0) {
    auto integrand = [&](double u) {
      if (u <= 0.0) return 0.0;
      const double v = df * (u / x) * (u / x);
      return (u / x) * normal_pdf(u - delta) * std::exp(chi_square_log_density(v, df)) * 2.0 * df * u / (x * x);
    };
    value = integrate(integrand, 0.0, INFINITY, opt).value;
  } else {
    auto integrand = [&](double v) {
      if (v <= 0.0) return 0.0;
      const double s = std::sqrt(v / df);
      return s * normal_pdf(x * s - delta) * std::exp(chi_square_log_density(v, df));
    };
    value = integrate(integrand, 0.0, INFINITY, opt).value;
  }
  return std::max(0.0, value);
}

double DistributionModel::mean(int i) const {
  check_index(i);
  switch (family_) {
    case Family::gaussian_location: return location_[i - 1];
    case Family::t_location: return scale_[i - 1] * noncentral_t_mean(df_, location_[i - 1]);
    case Family::discrete: {
      const auto& l = laws_[i - 1];
      CompensatedSum s;
      for (std::size_t k = 0; k < l.support.size(); ++k) s += l.probabilities[k] * l.support[k];
      return s.value();
    }
  }
  return 0.0;
}

double DistributionModel::sd(int i) const {
  check_index(i);
  switch (family_) {
    case Family::gaussian_location: return scale_[i - 1];
    case Family::t_location: return scale_[i - 1] * std::sqrt(noncentral_t_variance(df_, location_[i - 1]));
    case Family::discrete: {
      const auto& l = laws_[i - 1];
      const double mu = mean(i);
      CompensatedSum s;
      for (std::size_t k = 0; k < l.support.size(); ++k)
        s += l.probabilities[k] * (l.support[k] - mu) * (l.support[k] - mu);
      return std::sqrt(s.value());
    }
  }
  return 0.0;
}

double DistributionModel::survival(int i, double x) const {
  check_index(i);
  switch (family_) {
    case Family::gaussian_location: return normal_sf((x - location_[i - 1]) / scale_[i - 1]);
    case Family::t_location: return noncentral_t_survival(x / scale_[i - 1], df_, location_[i - 1]);
    case Family::discrete: {
      const auto& l = laws_[i - 1];
      CompensatedSum s;
      for (std::size_t k = 0; k < l.support.size(); ++k)
        if (l.support[k] > x) s += l.probabilities[k];
      return s.value();
    }
  }
  return 0.0;
}

double DistributionModel::cdf_below(int i, double x) const {
  check_index(i);
  if (family_ == Family::discrete) {
    const auto& l = laws_[i - 1];
    CompensatedSum s;
    for (std::size_t k = 0; k < l.support.size(); ++k)
      if (l.support[k] < x) s += l.probabilities[k];
    return s.value();
  }
  if (family_ == Family::gaussian_location) return normal_cdf((x - location_[i - 1]) / scale_[i - 1]);
  return 1.0 - survival(i, x);
}

double DistributionModel::density(int i, double x) const {
  check_index(i);
  switch (family_) {
    case Family::gaussian_location: {
      const double s = scale_[i - 1];
      return normal_pdf((x - location_[i - 1]) / s) / s;
    }
    case Family::t_location: {
      const double s = scale_[i - 1];
      return noncentral_t_density(x / s, df_, location_[i - 1]) / s;
    }
    case Family::discrete: throw Unsupported("discrete laws have no Lebesgue density");
  }
  return 0.0;
}

QuadratureRule DistributionModel::expectation_rule(int i) const {
  check_index(i);
  QuadratureRule rule;
  switch (family_) {
    case Family::discrete:
      rule.nodes = laws_[i - 1].support;
      rule.weights = laws_[i - 1].probabilities;
      return rule;
    case Family::gaussian_location: {
      const auto& gh = gauss_hermite_normal(64);
      rule.weights = gh.weights;
      for (double z : gh.nodes) rule.nodes.push_back(location_[i - 1] + scale_[i - 1] * z);
      return rule;
    }
    case Family::t_location: {
      const auto& gl = gauss_legendre(192);
      const double center = scale_[i - 1] * location_[i - 1];
      const double width = 2.0 * scale_[i - 1];
      CompensatedSum total;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double t = gl.nodes[k];
        const double d = 1.0 - t * t;
        const double x = center + width * t / d;
        const double w = gl.weights[k] * width * (1.0 + t * t) / (d * d) * density(i, x);
        rule.nodes.push_back(x);
        rule.weights.push_back(w);
        total += w;
      }
      for (double& w : rule.weights) w /= total.value();
      return rule;
    }
  }
  return rule;
}

double DistributionModel::sample(int i, Generator& gen) const {
  check_index(i);
  switch (family_) {
    case Family::gaussian_location: return location_[i - 1] + scale_[i - 1] * gen.normal();
    case Family::t_location: {
      const double z = gen.normal();
      const double v = gen.chi_square(df_);
      return scale_[i - 1] * (z + location_[i - 1]) / std::sqrt(v / df_);
    }
    case Family::discrete: {
      const auto& l = laws_[i - 1];
      double u = gen.uniform();
      for (std::size_t k = 0; k + 1 < l.support.size(); ++k) {
        if (u <= l.probabilities[k]) return l.support[k];
        u -= l.probabilities[k];
      }
      return l.support.back();
    }
  }
  return 0.0;
}

void DistributionModel::sample_row(Generator& gen, std::span<double> out) const {
  if (static_cast<int>(out.size()) != size()) throw InvalidInput("row buffer length differs from model size");
  for (int i = 1; i <= size(); ++i) out[i - 1] = sample(i, gen);
}

std::vector<double> DistributionModel::sample_row(Generator& gen) const {
  std::vector<double> out(size());
  sample_row(gen, out);
  return out;
}

double pair_theta(const DistributionModel& model, int i, int j) {
  switch (model.family()) {
    case Family::gaussian_location: {
      const double si = model.scale(i);
      const double sj = model.scale(j);
      return normal_cdf((model.location(j) - model.location(i)) / std::sqrt(si * si + sj * sj));
    }
    case Family::discrete: {
      const auto& li = model.law(i);
      CompensatedSum s;
      for (std::size_t k = 0; k < li.support.size(); ++k) s += li.probabilities[k] * model.survival(j, li.support[k]);
      return s.value();
    }
    case Family::t_location: {
      // Conditional on the chi-square mixing variables the comparison is
      // Gaussian: P(X_j > X_i | V_i, V_j) = Phi(mean / sd) with
      //   mean = sigma_j s_i delta_j - sigma_i s_j delta_i,
      //   sd^2 = sigma_j^2 s_i^2 + sigma_i^2 s_j^2,  s = sqrt(V / df).
      const double df = model.df();
      const double di = model.location(i), dj = model.location(j);
      const double gi = model.scale(i), gj = model.scale(j);
      QuadratureOptions inner_opt;
      inner_opt.abs_tol = 1e-10;
      QuadratureOptions outer_opt;
      outer_opt.abs_tol = 1e-9;
      auto outer = [&](double vi) {
        if (vi <= 0.0) return 0.0;
        const double si = std::sqrt(vi / df);
        auto inner = [&](double vj) {
          if (vj <= 0.0) return 0.0;
          const double sj = std::sqrt(vj / df);
          const double mean = gj * si * dj - gi * sj * di;
          const double sd = std::sqrt(gj * gj * si * si + gi * gi * sj * sj);
          return normal_cdf(mean / sd) * std::exp(chi_square_log_density(vj, df));
        };
        return integrate(inner, 0.0, INFINITY, inner_opt).value * std::exp(chi_square_log_density(vi, df));
      };
      return std::clamp(integrate(outer, 0.0, INFINITY, outer_opt).value, 0.0, 1.0);
    }
  }
  return 0.0;
}

ThetaTable pairwise_theta(const DistributionModel& model) {
  const int n = model.size();
  if (n > kThetaTableGuard) throw SizeError("pairwise theta table guard exceeded");
  ThetaTable table(n);
  const bool continuous = model.continuous();
  for (int i = 1; i <= n; ++i) {
    table(i, i) = continuous ? 0.5 : pair_theta(model, i, i);
    for (int j = i + 1; j <= n; ++j) {
      const double t = pair_theta(model, i, j);
      table(i, j) = t;
      table(j, i) = continuous ? 1.0 - t : pair_theta(model, j, i);
    }
  }
  return table;
}

SurvivalTable::SurvivalTable(const DistributionModel& model, double step) : model_(&model), step_(step) {
  if (model.family() != Family::t_location) return;
  const int n = model.size();
  lo_.resize(n);
  values_.resize(n);
  slopes_.resize(n);
  for (int i = 1; i <= n; ++i) {
    const double sigma = model.scale(i);
    const double delta = model.location(i);
    const double lo = sigma * (std::min(delta, 0.0) - 30.0);
    const double hi = sigma * (2.0 * std::max(delta, 0.0) + 30.0);
    const int points = static_cast<int>(std::ceil((hi - lo) / (step_ * sigma))) + 1;
    lo_[i - 1] = lo;
    auto& v = values_[i - 1];
    auto& d = slopes_[i - 1];
    v.resize(points);
    d.resize(points);
    for (int k = 0; k < points; ++k) {
      const double x = lo + k * step_ * sigma;
      v[k] = model.survival(i, x);
      d[k] = -model.density(i, x);
    }
  }
}

double SurvivalTable::operator()(int i, double x) const {
  if (model_->family() != Family::t_location) return model_->survival(i, x);
  const double h = step_ * model_->scale(i);
  const auto& v = values_[i - 1];
  const double pos = (x - lo_[i - 1]) / h;
  if (!(pos >= 0.0) || pos >= static_cast<double>(v.size() - 1)) return model_->survival(i, x);
  const auto k = static_cast<std::size_t>(pos);
  const double t = pos - static_cast<double>(k);
  const auto& d = slopes_[i - 1];
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * v[k] + (t3 - 2 * t2 + t) * h * d[k] + (-2 * t3 + 3 * t2) * v[k + 1] +
         (t3 - t2) * h * d[k + 1];
}

std::string to_string(ScenarioFamily family) { return family == ScenarioFamily::gaussian ? "gaussian" : "t5"; }

ScenarioFamily parse_scenario_family(const std::string& name) {
  if (name == "gaussian") return ScenarioFamily::gaussian;
  if (name == "t5" || name == "t") return ScenarioFamily::t5;
  throw InvalidInput("unknown family '" + name + "'");
}

DistributionModel make_scenario(ScenarioFamily family, int n, double rn, std::uint64_t /*seed*/) {
  if (n < 2) throw InvalidInput("scenario needs n >= 2");
  if (!(rn >= 0.0) || !std::isfinite(rn)) throw RangeError("R_n must be a finite non-negative number");
  std::vector<double> locations(n);
  for (int i = 1; i <= n; ++i) locations[i - 1] = rn * static_cast<double>(n - i) / static_cast<double>(n - 1);
  if (family == ScenarioFamily::gaussian) return DistributionModel::gaussian(std::move(locations));
  return DistributionModel::noncentral_t(std::move(locations), 5.0);
}

std::string ScenarioModelBlock::to_json() const {
  nlohmann::json j;
  j["family"] = to_string(family);
  j["n"] = n;
  j["Rn"] = rn;
  j["df"] = df;
  j["seed"] = seed;
  return j.dump();
}

ScenarioModelBlock ScenarioModelBlock::from_json(const std::string& text) {
  ScenarioModelBlock b;
  try {
    const auto j = nlohmann::json::parse(text);
    b.family = parse_scenario_family(j.at("family").get<std::string>());
    b.n = j.at("n").get<int>();
    b.rn = j.contains("Rn") ? j.at("Rn").get<double>() : j.at("rn").get<double>();
    b.df = j.value("df", 5.0);
    b.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario block: ") + e.what());
  }
  return b;
}

DistributionModel ScenarioModelBlock::build() const {
  if (family == ScenarioFamily::t5 && df != 5.0) {
    auto base = make_scenario(ScenarioFamily::gaussian, n, rn, seed);
    std::vector<double> locations(n);
    for (int i = 1; i <= n; ++i) locations[i - 1] = base.location(i);
    return DistributionModel::noncentral_t(std::move(locations), df);
  }
  return make_scenario(family, n, rn, seed);
}

double xi(double p) {
  if (!(p > 0.0)) throw RangeError("xi: p must be positive");
  return p <= 1.0 ? 1.0 : std::pow(2.0, p - 1.0);
}

double light_tail_rn_bound(int n, double b1, double lambda, double k4) {
  return std::pow(std::log(static_cast<double>(n)) /
                      (3.0 * b1 * (3.0 + xi(lambda) * std::pow(1.0 + k4, lambda))),
                  1.0 / lambda);
}

TailDiagnostics tail_diagnostics(const DistributionModel& model, const TailParameters& p) {
  if (!(p.b1 > p.b2 && p.b2 > 0.0)) throw InvalidInput("tail parameters require b1 > b2 > 0");
  if (!(p.lambda > 0.0 && p.c1 > 0.0 && p.c2 > 0.0 && p.t0 > 0.0))
    throw InvalidInput("tail parameters require lambda, c1, c2, t0 > 0");
  const int n = model.size();
  if (n < 3) throw InvalidInput("tail diagnostics need n >= 3");

  TailDiagnostics out;
  out.regime = p.regime;
  out.b1 = p.b1;
  out.b2 = p.b2;
  out.c1 = p.c1;
  out.c2 = p.c2;
  out.t0 = p.t0;
  out.lambda = p.lambda;

  std::vector<double> mu(n), sigma(n);
  for (int i = 1; i <= n; ++i) {
    mu[i - 1] = model.mean(i);
    sigma[i - 1] = model.sd(i);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      out.rn = std::max(out.rn, std::abs((mu[i] - mu[j]) / sigma[i]));
      out.rho_n = std::max(out.rho_n, sigma[i] / sigma[j]);
    }

  const double log_n = std::log(static_cast<double>(n));
  if (p.regime == TailRegime::heavy) {
    out.lhs = std::pow(out.rn, (3.0 * p.b1 * p.b2 + p.b1 * p.b1) / p.b2) * std::pow(out.rho_n, p.b1);
    out.rhs_kendall = std::cbrt(static_cast<double>(n));
    out.rhs_ap = std::cbrt(static_cast<double>(n)) / (log_n * log_n);
  } else {
    const double base = -std::log(p.c1 / (2.0 * p.c2)) / p.b2;
    if (base < 0.0) throw InvalidInput("light-tail constants need c1 <= 2 c2");
    const double inv = 1.0 / p.lambda;
    out.k4 = xi(inv) * std::pow(p.b1 / p.b2, inv);
    out.k3 = p.t0 + std::pow(base + p.b1 / p.b2 * std::pow(p.t0, p.lambda), inv) + xi(inv) * std::pow(base, inv);
    out.lhs = 3.0 * p.b1 * std::pow(out.rn, p.lambda) +
              p.b1 * std::pow(out.rn + out.k3 * out.rho_n + out.k4 * out.rho_n * out.rn, p.lambda);
    out.rhs_kendall = log_n / 3.0;
    out.rhs_ap = log_n / 3.0 - 2.0 * std::log(log_n);
  }
  out.satisfied_kendall = out.lhs < out.rhs_kendall;
  out.satisfied_ap = out.lhs < out.rhs_ap;

  bool holds = true;
  for (double factor : {1.0, 1.5, 2.0, 3.0, 4.0}) {
    const double t = p.t0 * factor;
    const double lower = p.regime == TailRegime::heavy ? p.c1 * std::pow(t, -p.b1)
                                                       : p.c1 * std::exp(-p.b1 * std::pow(t, p.lambda));
    const double upper = p.regime == TailRegime::heavy ? p.c2 * std::pow(t, -p.b2)
                                                       : p.c2 * std::exp(-p.b2 * std::pow(t, p.lambda));
    for (int j = 1; j <= n && holds; ++j) {
      const double tail = p.lower_tail ? model.cdf_below(j, mu[j - 1] - sigma[j - 1] * t)
                                       : model.survival(j, mu[j - 1] + sigma[j - 1] * t);
      holds = tail >= lower && tail <= upper;
    }
  }
  out.tail_bounds_hold = holds;
  return out;
}

}  // namespace wustat
