#include "wustat/gof.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "wustat/errors.hpp"
#include "wustat/normal.hpp"
#include "wustat/numeric.hpp"
#include "wustat/rng.hpp"

namespace wustat {
namespace {

constexpr std::uint64_t kGofDomain = 0x676f66ull;

// Standardized order statistics mapped through Phi.
std::vector<double> probability_integral(std::span<const double> data) {
  const std::size_t n = data.size();
  if (n < static_cast<std::size_t>(kGofMinObservations)) throw InvalidInput("normality tests need at least 8 values");
  for (double x : data)
    if (!std::isfinite(x)) throw InvalidInput("normality tests need finite values");
  CompensatedSum s;
  for (double x : data) s += x;
  const double mean = s.value() / static_cast<double>(n);
  CompensatedSum ss;
  for (double x : data) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss.value() / static_cast<double>(n - 1));
  if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::abs(mean))) throw DegenerateError("sample has zero variance");
  std::vector<double> p(data.begin(), data.end());
  std::sort(p.begin(), p.end());
  for (double& v : p) v = normal_cdf((v - mean) / sd);
  return p;
}

double cvm_statistic(const std::vector<double>& p) {
  const double n = static_cast<double>(p.size());
  CompensatedSum w;
  w += 1.0 / (12.0 * n);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - (2.0 * i + 1.0) / (2.0 * n);
    w += d * d;
  }
  return w.value();
}

double ks_statistic(const std::vector<double>& p) {
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d = std::max(d, (i + 1.0) / n - p[i]);
    d = std::max(d, p[i] - i / n);
  }
  return d;
}

// Stephens's fit on the modified statistic WW = (1 + 0.5/n) W^2.
double cvm_piecewise(double ww) {
  if (ww < 0.0275) return 1.0 - std::exp(-13.953 + 775.5 * ww - 12542.61 * ww * ww);
  if (ww < 0.051) return 1.0 - std::exp(-5.903 + 179.546 * ww - 1515.29 * ww * ww);
  if (ww < 0.092) return std::exp(0.886 - 31.62 * ww + 10.897 * ww * ww);
  if (ww < 1.1) return std::exp(1.111 - 34.242 * ww + 12.832 * ww * ww);
  return 7.37e-10;
}

double kk_factor(int n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return rn - 0.01 + 0.85 / rn;
}

double dallal_wilkinson(double d, int n) {
  double kd = d;
  double nd = n;
  if (n > 100) {
    kd = d * std::pow(n / 100.0, 0.49);
    nd = 100.0;
  }
  return std::exp(-7.01256 * kd * kd * (nd + 2.78019) + 2.99587 * kd * std::sqrt(nd + 2.78019) - 0.122119 +
                  0.974598 / std::sqrt(nd) + 1.67997 / nd);
}

// Stephens-style polynomials in the rescaled statistic, used while the
// Dallal-Wilkinson value exceeds 0.1.
double lilliefors_upper(double d, int n) {
  const double kk = kk_factor(n) * d;
  if (kk <= 0.302) return 1.0;
  if (kk <= 0.5) return 2.76773 - 19.828315 * kk + 80.709644 * kk * kk - 138.55152 * kk * kk * kk + 81.218052 * kk * kk * kk * kk;
  if (kk <= 0.9) return -4.901232 + 40.662806 * kk - 97.490286 * kk * kk + 94.029866 * kk * kk * kk - 32.355711 * kk * kk * kk * kk;
  if (kk <= 1.31) return 6.198765 - 19.558097 * kk + 23.186922 * kk * kk - 12.234627 * kk * kk * kk + 2.423045 * kk * kk * kk * kk;
  return 0.0;
}

double lilliefors_piecewise(double d, int n) {
  const double p = dallal_wilkinson(d, n);
  return p <= 0.1 ? p : lilliefors_upper(d, n);
}

// Upper root in d of dallal_wilkinson(d, n) = 0.1, where the formula hands over.
double dallal_wilkinson_switch(int n) {
  const double nd = std::min(n, 100);
  const double a = -7.01256 * (nd + 2.78019);
  const double b = 2.99587 * std::sqrt(nd + 2.78019);
  const double c = -0.122119 + 0.974598 / std::sqrt(nd) + 1.67997 / nd - std::log(0.1);
  const double kd = (-b - std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a);
  return n > 100 ? kd / std::pow(n / 100.0, 0.49) : kd;
}

struct Joint {
  double at;
  double left_value;
};

// Caps a piecewise p-value at the left limits of the joints before x.
double capped(double p, double x, std::span<const Joint> joints) {
  for (const auto& j : joints)
    if (j.at <= x) p = std::min(p, j.left_value);
  return std::clamp(p, 0.0, 1.0);
}

double just_below(double x) { return std::nextafter(x, -std::numeric_limits<double>::infinity()); }

template <class Statistic>
double monte_carlo_p(double observed, int n, const GofOptions& options, std::uint64_t test_tag, Statistic&& stat) {
  if (options.simulations < 1) throw InvalidInput("Monte Carlo p-values need at least one simulation");
  const Stream root = Stream(options.seed, kGofDomain).child(test_tag).child(static_cast<std::uint64_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n));
  long exceed = 0;
  for (int s = 0; s < options.simulations; ++s) {
    Generator g(root.child(static_cast<std::uint64_t>(s)));
    for (double& v : z) v = g.normal();
    if (stat(probability_integral(z)) >= observed) ++exceed;
  }
  return (1.0 + exceed) / (1.0 + options.simulations);
}

}  // namespace

std::string to_string(GofTest test) { return test == GofTest::cvm ? "cvm" : "lilliefors"; }

double cvm_p_value(double w2, int n) {
  static const std::array<Joint, 4> joints = [] {
    std::array<Joint, 4> j{};
    const double at[4] = {0.0275, 0.051, 0.092, 1.1};
    for (int k = 0; k < 4; ++k) j[k] = {at[k], cvm_piecewise(just_below(at[k]))};
    return j;
  }();
  const double ww = (1.0 + 0.5 / n) * w2;
  return capped(cvm_piecewise(ww), ww, joints);
}

double lilliefors_p_value(double d, int n) {
  const double kk = kk_factor(n);
  const double handover = dallal_wilkinson_switch(n);
  std::vector<Joint> joints{{handover, lilliefors_upper(handover, n)}};
  // Joints of the polynomial pieces matter only before the handover.
  for (double kk_at : {0.5, 0.9, 1.31})
    if (kk_at / kk < handover) joints.push_back({kk_at / kk, lilliefors_upper(just_below(kk_at / kk), n)});
  return capped(lilliefors_piecewise(d, n), d, joints);
}

GofResult cvm_normality(std::span<const double> data, const GofOptions& options) {
  const auto p = probability_integral(data);
  GofResult r;
  r.test = GofTest::cvm;
  r.n_obs = static_cast<int>(p.size());
  r.statistic = cvm_statistic(p);
  r.p_value = options.monte_carlo ? monte_carlo_p(r.statistic, r.n_obs, options, 1, cvm_statistic)
                                  : cvm_p_value(r.statistic, r.n_obs);
  return r;
}

GofResult lilliefors(std::span<const double> data, const GofOptions& options) {
  const auto p = probability_integral(data);
  GofResult r;
  r.test = GofTest::lilliefors;
  r.n_obs = static_cast<int>(p.size());
  r.statistic = ks_statistic(p);
  r.p_value = options.monte_carlo ? monte_carlo_p(r.statistic, r.n_obs, options, 2, ks_statistic)
                                  : lilliefors_p_value(r.statistic, r.n_obs);
  return r;
}

}  // namespace wustat
