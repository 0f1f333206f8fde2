#include "wustat/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace wustat {
namespace {

QuadratureRule build_hermite(int n) {
  // Newton iteration on orthonormal Hermite polynomials (weight exp(-x^2)).
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  std::vector<double> x(n), w(n);
  double z = 0.0;
  const int half = (n + 1) / 2;
  for (int i = 1; i <= half; ++i) {
    if (i == 1) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 2) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 3) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 4) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 3];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double previous = z;
      z = previous - p1 / pp;
      if (std::abs(z - previous) <= 1e-14) break;
    }
    x[i - 1] = z;
    x[n - i] = -z;
    w[i - 1] = w[n - i] = 2.0 / (pp * pp);
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = std::numbers::sqrt2 * x[i];
    rule.weights[i] = w[i] / std::sqrt(std::numbers::pi);
  }
  return rule;
}

QuadratureRule build_legendre(int n) {
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 1; i <= half; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double previous = z;
      z = previous - p1 / pp;
      if (std::abs(z - previous) <= 1e-15) break;
    }
    rule.nodes[i - 1] = -z;
    rule.nodes[n - i] = z;
    rule.weights[i - 1] = rule.weights[n - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return rule;
}

template <class Build>
const QuadratureRule& cached(std::map<int, QuadratureRule>& cache, int points, Build build) {
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, build(points)).first;
  return it->second;
}

}  // namespace

const QuadratureRule& gauss_hermite_normal(int points) {
  if (points < 1) throw InvalidInput("gauss_hermite_normal: points must be positive");
  static std::map<int, QuadratureRule> cache;
  return cached(cache, points, build_hermite);
}

const QuadratureRule& gauss_legendre(int points) {
  if (points < 1) throw InvalidInput("gauss_legendre: points must be positive");
  static std::map<int, QuadratureRule> cache;
  return cached(cache, points, build_legendre);
}

}  // namespace wustat
