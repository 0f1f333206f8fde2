#pragma once

// Global adaptive Gauss-Kronrod (7/15) integration.
//
// Interior-node rules cannot see a jump that falls between a segment end and
// its outermost node. Integrands with discontinuities (indicator kernels) set
// `discontinuous`, which switches to the Gauss-Kronrod-Lobatto (4/7) pair:
// both rules include the endpoints, so any jump inside a segment shows up in
// the error estimate.
//
// Infinite ranges are mapped onto finite ones with rational substitutions;
// failures to reach tolerance are reported by NumericError, never returned as
// a silently degraded value.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "wustat/errors.hpp"

namespace wustat {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_intervals = 4000;
  bool discontinuous = false;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  friend bool operator<(const Segment& x, const Segment& y) { return x.error < y.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  std::array<double, 7> f1{}, f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    kronrod += kKronrodWeights[j] * (f1[j] + f2[j]);
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1[j] + f2[j]);
  }
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j)
    asc += kKronrodWeights[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  asc *= std::abs(half);
  const double value = kronrod * half;
  double error = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && error != 0.0) error = asc * std::min(1.0, std::pow(200.0 * error / asc, 1.5));
  return {a, b, value, error};
}

template <class F>
Segment lobatto_kronrod7(F& f, double a, double b) {
  static constexpr double kX1 = 0.816496580927726032732428024901964;  // sqrt(2/3)
  static constexpr double kX2 = 0.447213595499957939281834733746255;  // 1/sqrt(5)
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fa = f(a), fb = f(b);
  const double f1 = f(center - kX1 * half) + f(center + kX1 * half);
  const double f2l = f(center - kX2 * half), f2r = f(center + kX2 * half);
  const double fc = f(center);
  const double lobatto = (fa + fb) / 6.0 + 5.0 * (f2l + f2r) / 6.0;
  const double kronrod = 11.0 / 210.0 * (fa + fb) + 72.0 / 245.0 * f1 + 125.0 / 294.0 * (f2l + f2r) + 16.0 / 35.0 * fc;
  return {a, b, kronrod * half, std::abs((kronrod - lobatto) * half)};
}

template <class F>
QuadratureResult adaptive_finite(F& f, double a, double b, const QuadratureOptions& opt) {
  auto rule = [&](double lo, double hi) {
    return opt.discontinuous ? lobatto_kronrod7(f, lo, hi) : kronrod15(f, lo, hi);
  };
  const int per_rule = opt.discontinuous ? 7 : 15;
  // A jump near an infinite end meets a vanishing integrand at the endpoint,
  // so the jump-aware mode also starts from a finer partition.
  const int pieces = opt.discontinuous ? 16 : 1;
  std::vector<Segment> heap;
  double value = 0.0;
  double error = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + (b - a) * k / pieces;
    const double hi = k + 1 == pieces ? b : a + (b - a) * (k + 1) / pieces;
    const Segment seg = rule(lo, hi);
    value += seg.value;
    error += seg.error;
    heap.push_back(seg);
    std::push_heap(heap.begin(), heap.end());
  }
  int evaluations = pieces * per_rule;
  auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(value)); };
  while (error > tolerance()) {
    if (static_cast<int>(heap.size()) >= opt.max_intervals) break;
    std::pop_heap(heap.begin(), heap.end());
    const Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;
    }
    const Segment left = rule(worst.a, mid);
    const Segment right = rule(mid, worst.b);
    evaluations += 2 * per_rule;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
  }
  // Re-sum to shed accumulated update round-off.
  value = 0.0;
  error = 0.0;
  for (const auto& s : heap) {
    value += s.value;
    error += s.error;
  }
  if (!std::isfinite(value)) throw NumericError("quadrature produced a non-finite value", error);
  if (error > tolerance()) throw NumericError("quadrature did not converge", error);
  return {value, error, evaluations};
}

}  // namespace detail

/// Integrate f over [a, b]; either bound may be infinite.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return {};
  if (a > b) {
    auto r = integrate(f, b, a, opt);
    r.value = -r.value;
    return r;
  }
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  auto guarded = [](double value, double jacobian) {
    const double product = value * jacobian;
    return std::isfinite(jacobian) && std::isfinite(product) ? product : 0.0;
  };
  if (lo_inf && hi_inf) {
    auto g = [&](double t) {
      const double d = 1.0 - t * t;
      const double x = t / d;
      if (!std::isfinite(x)) return 0.0;
      return guarded(f(x), (1.0 + t * t) / (d * d));
    };
    return detail::adaptive_finite(g, -1.0, 1.0, opt);
  }
  if (hi_inf) {
    auto g = [&](double t) {
      const double d = 1.0 - t;
      const double x = a + t / d;
      if (!std::isfinite(x)) return 0.0;
      return guarded(f(x), 1.0 / (d * d));
    };
    return detail::adaptive_finite(g, 0.0, 1.0, opt);
  }
  if (lo_inf) {
    auto g = [&](double t) {
      const double d = 1.0 - t;
      const double x = b - t / d;
      if (!std::isfinite(x)) return 0.0;
      return guarded(f(x), 1.0 / (d * d));
    };
    return detail::adaptive_finite(g, 0.0, 1.0, opt);
  }
  return detail::adaptive_finite(f, a, b, opt);
}

/// Fixed rule: nodes and weights summing to the integral of a probability law.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule for E f(Z), Z ~ N(0, 1) (probabilists' weight).
const QuadratureRule& gauss_hermite_normal(int points);

/// Gauss-Legendre rule on [-1, 1].
const QuadratureRule& gauss_legendre(int points);

}  // namespace wustat
