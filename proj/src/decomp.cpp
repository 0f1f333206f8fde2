#include "wustat/decomp.hpp"

#include <cmath>
#include <map>
#include <tuple>

#include "wustat/errors.hpp"
#include "wustat/numeric.hpp"

namespace wustat {
namespace {

double falling_factorial(int n, int k) {
  double r = 1.0;
  for (int t = 0; t < k; ++t) r *= static_cast<double>(n - t);
  return r;
}

// Calls fn(tuple) for every ordered k-tuple of distinct indices in [1, n]
// avoiding `exclude`, in lexicographic order.
template <class Fn>
void for_each_tuple(int n, int k, int exclude, Fn&& fn) {
  std::vector<int> t(k, 0);
  std::vector<char> used(n + 1, 0);
  if (exclude >= 1) used[exclude] = 1;
  if (k == 0) {
    fn(std::span<const int>(t));
    return;
  }
  int pos = 0;
  t[0] = 0;
  while (pos >= 0) {
    if (t[pos] > 0) used[t[pos]] = 0;
    int next = t[pos] + 1;
    while (next <= n && used[next]) ++next;
    if (next > n) {
      t[pos] = 0;
      --pos;
      continue;
    }
    t[pos] = next;
    used[next] = 1;
    if (pos + 1 == k) {
      fn(std::span<const int>(t));
    } else {
      ++pos;
      t[pos] = 0;
    }
  }
}

// Calls fn(values, probability) for every joint outcome of the discrete laws
// at `indices`.
template <class Fn>
void for_each_outcome(const DistributionModel& model, std::span<const int> indices, Fn&& fn) {
  const auto k = indices.size();
  std::vector<std::size_t> pos(k, 0);
  std::vector<double> values(k);
  while (true) {
    double p = 1.0;
    for (std::size_t a = 0; a < k; ++a) {
      const auto& law = model.law(indices[a]);
      values[a] = law.support[pos[a]];
      p *= law.probabilities[pos[a]];
    }
    fn(std::span<const double>(values), p);
    std::size_t a = 0;
    for (; a < k; ++a) {
      if (++pos[a] < model.law(indices[a]).support.size()) break;
      pos[a] = 0;
    }
    if (a == k) return;
  }
}

// User kernels may be indicators, so integrals of the raw kernel use the
// jump-aware rule. Inner integrals run well below the context tolerance
// because theta errors are amplified by the weights in h1.
QuadratureOptions kernel_options(double abs_tol) {
  QuadratureOptions opt;
  opt.abs_tol = abs_tol;
  opt.discontinuous = true;
  opt.max_intervals = 20000;
  return opt;
}

}  // namespace

struct DecompContext::Cache {
  std::map<std::vector<int>, double> theta;
  std::map<std::tuple<int, std::vector<int>, double>, double> f;
};

DecompContext::DecompContext(const DistributionModel& model, UStatSpec spec, DecompOptions options)
    : model_(&model), spec_(std::move(spec)), options_(options) {
  if (spec_.degree < 1) throw InvalidInput("degree must be at least 1");
  if (spec_.degree > model.size()) throw InvalidInput("degree exceeds the number of indices");
  if (options_.use_closed_forms && spec_.rank) rank_ = spec_.rank;
  if (!model.continuous()) return;
  if (spec_.degree > 2) throw Unsupported("continuous decomposition is limited to degree m <= 2");
  if (rank_ && model.family() == Family::t_location) t_survival_ = std::make_shared<const SurvivalTable>(model);
  if (!rank_) return;

  const int n = model.size();
  theta_ = pairwise_theta(model);
  row_offset_.assign(n, 0.0);
  for (int i = 1; i <= n; ++i) {
    CompensatedSum s;
    for (int j = 1; j <= n; ++j) {
      if (j == i) continue;
      s += rank_weight(*rank_, i, j, n) * theta_(i, j) + rank_weight(*rank_, j, i, n) * theta_(j, i);
    }
    row_offset_[i - 1] = s.value();
  }
}

const ThetaTable& DecompContext::theta_table() const {
  if (!rank_) throw Unsupported("theta table is only kept for rank statistics");
  return theta_;
}

double DecompContext::survival(int j, double x) const {
  return t_survival_ ? (*t_survival_)(j, x) : model_->survival(j, x);
}

double DecompContext::below(int j, double x) const {
  return model_->continuous() ? 1.0 - survival(j, x) : model_->cdf_below(j, x);
}

namespace {

void check_indices(std::span<const int> indices, int expected, int n) {
  if (static_cast<int>(indices.size()) != expected) throw InvalidInput("wrong number of indices");
  for (std::size_t a = 0; a < indices.size(); ++a) {
    if (indices[a] < 1 || indices[a] > n) throw InvalidInput("index outside [1, n]");
    for (std::size_t b = 0; b < a; ++b)
      if (indices[a] == indices[b]) throw InvalidInput("indices must be distinct");
  }
}

}  // namespace

double DecompContext::theta(std::span<const int> indices) const {
  check_indices(indices, spec_.degree, n());
  return theta_cached(indices, nullptr);
}

double DecompContext::theta_cached(std::span<const int> indices, Cache* cache) const {
  if (rank_ && model_->continuous()) return theta_(indices[0], indices[1]);
  std::vector<int> key(indices.begin(), indices.end());
  if (cache) {
    if (auto it = cache->theta.find(key); it != cache->theta.end()) return it->second;
  }
  double value = 0.0;
  if (!model_->continuous()) {
    CompensatedSum s;
    for_each_outcome(*model_, indices, [&](std::span<const double> v, double p) { s += p * spec_.kernel(v); });
    value = s.value();
  } else if (spec_.degree == 1) {
    value = model_->expect(indices[0], [&](double x) { return spec_.kernel(std::span<const double>(&x, 1)); },
                           kernel_options(1e-2 * options_.abs_tol));
  } else {
    const int rest = indices[1];
    value = model_->expect(
        indices[0], [&](double x) { return f_cached(1, x, std::span<const int>(&rest, 1), nullptr); },
        1e-2 * options_.abs_tol);
  }
  if (cache) cache->theta.emplace(std::move(key), value);
  return value;
}

double DecompContext::kernel_expectation(std::span<const int> indices,
                                         const std::function<double(double)>& g) const {
  check_indices(indices, spec_.degree, n());
  auto gh = [&](std::span<const double> v) { return g(spec_.kernel(v)); };
  if (!model_->continuous()) {
    CompensatedSum s;
    for_each_outcome(*model_, indices, [&](std::span<const double> v, double p) { s += p * gh(v); });
    return s.value();
  }
  if (spec_.degree == 1)
    return model_->expect(indices[0], [&](double x) { return gh(std::span<const double>(&x, 1)); },
                          kernel_options(options_.abs_tol));
  double pair[2];
  return model_->expect(
      indices[0],
      [&](double x) {
        return model_->expect(
            indices[1],
            [&](double y) {
              pair[0] = x;
              pair[1] = y;
              return gh(pair);
            },
            kernel_options(1e-2 * options_.abs_tol));
      },
      options_.abs_tol);
}

double DecompContext::f_l(int l, double x, std::span<const int> others) const {
  if (l < 1 || l > spec_.degree) throw InvalidInput("position l outside [1, m]");
  check_indices(others, spec_.degree - 1, n());
  return f_cached(l, x, others, nullptr);
}

double DecompContext::f_cached(int l, double x, std::span<const int> others, Cache* cache) const {
  if (rank_) return l == 1 ? survival(others[0], x) : below(others[0], x);
  std::tuple<int, std::vector<int>, double> key;
  if (cache) {
    key = {l, std::vector<int>(others.begin(), others.end()), x};
    if (auto it = cache->f.find(key); it != cache->f.end()) return it->second;
  }
  const int m = spec_.degree;
  std::vector<double> args(m);
  auto kernel_at = [&](std::span<const double> ys) {
    for (int a = 0, b = 0; a < m; ++a) args[a] = (a == l - 1) ? x : ys[b++];
    return spec_.kernel(args);
  };
  double value = 0.0;
  if (m == 1) {
    value = kernel_at({});
  } else if (!model_->continuous()) {
    CompensatedSum s;
    for_each_outcome(*model_, others, [&](std::span<const double> ys, double p) { s += p * kernel_at(ys); });
    value = s.value();
  } else {
    value = model_->expect(
        others[0], [&](double y) { return kernel_at(std::span<const double>(&y, 1)); },
        kernel_options(1e-3 * options_.abs_tol));
  }
  if (cache) cache->f.emplace(std::move(key), value);
  return value;
}

double DecompContext::h1(int i, double x) const {
  if (i < 1 || i > n()) throw InvalidInput("index outside [1, n]");
  Cache cache;
  return h1_cached(i, x, &cache);
}

double DecompContext::h1_cached(int i, double x, Cache* cache) const {
  const int n = this->n();
  const int m = spec_.degree;
  if (rank_ && model_->continuous()) {
    CompensatedSum s;
    for (int j = 1; j <= n; ++j) {
      if (j == i) continue;
      const double sj = survival(j, x);
      s += rank_weight(*rank_, i, j, n) * sj + rank_weight(*rank_, j, i, n) * (1.0 - sj);
    }
    s += -row_offset_[i - 1];
    return s.value() / static_cast<double>(n - 1);
  }
  if (std::pow(static_cast<double>(n), m - 1) * m > kEnumerationGuard)
    throw SizeError("h1 enumeration guard exceeded");
  CompensatedSum s;
  std::vector<int> full(m);
  for_each_tuple(n, m - 1, i, [&](std::span<const int> rest) {
    for (int l = 1; l <= m; ++l) {
      for (int a = 0, b = 0; a < m; ++a) full[a] = (a == l - 1) ? i : rest[b++];
      const double w = spec_.weight(full, n);
      if (w == 0.0) continue;
      s += w * (f_cached(l, x, rest, cache) - theta_cached(full, cache));
    }
  });
  return s.value() / falling_factorial(n - 1, m - 1);
}

std::vector<double> DecompContext::h1_values(std::span<const double> sample) const {
  if (static_cast<int>(sample.size()) != n()) throw InvalidInput("sample length differs from model size");
  Cache cache;
  std::vector<double> out(n());
  for (int i = 1; i <= n(); ++i) out[i - 1] = h1_cached(i, sample[i - 1], &cache);
  return out;
}

double DecompContext::h2(std::span<const int> indices, std::span<const double> xs) const {
  check_indices(indices, spec_.degree, n());
  if (xs.size() != indices.size()) throw InvalidInput("need one value per index");
  Cache cache;
  return h2_cached(indices, xs, &cache);
}

double DecompContext::h2_cached(std::span<const int> indices, std::span<const double> xs, Cache* cache) const {
  const int m = spec_.degree;
  CompensatedSum s;
  s += spec_.kernel(xs);
  std::vector<int> rest(m - 1);
  for (int l = 1; l <= m; ++l) {
    for (int a = 0, b = 0; a < m; ++a)
      if (a != l - 1) rest[b++] = indices[a];
    s += -f_cached(l, xs[l - 1], rest, cache);
  }
  s += (m - 1) * theta_cached(indices, cache);
  return s.value();
}

double DecompContext::expected_u() const {
  const int n = this->n();
  const int m = spec_.degree;
  if (rank_ && model_->continuous()) {
    CompensatedSum s;
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j)
        if (i != j) s += rank_weight(*rank_, i, j, n) * theta_(i, j);
    return s.value() / falling_factorial(n, 2);
  }
  if (std::pow(static_cast<double>(n), m) > kEnumerationGuard) throw SizeError("enumeration guard exceeded");
  Cache cache;
  CompensatedSum s;
  for_each_tuple(n, m, 0, [&](std::span<const int> t) {
    const double w = spec_.weight(t, n);
    if (w != 0.0) s += w * theta_cached(t, &cache);
  });
  return s.value() / falling_factorial(n, m);
}

double DecompContext::remainder_u(std::span<const double> sample) const {
  const int n = this->n();
  const int m = spec_.degree;
  if (static_cast<int>(sample.size()) != n) throw InvalidInput("sample length differs from model size");
  if (std::pow(static_cast<double>(n), m) > kEnumerationGuard) throw SizeError("enumeration guard exceeded");
  Cache cache;
  CompensatedSum s;
  std::vector<double> xs(m);
  for_each_tuple(n, m, 0, [&](std::span<const int> t) {
    const double w = spec_.weight(t, n);
    if (w == 0.0) return;
    for (int a = 0; a < m; ++a) xs[a] = sample[t[a] - 1];
    s += w * h2_cached(t, xs, &cache);
  });
  return s.value() / falling_factorial(n, m);
}

double DecompContext::decomposition_residual(std::span<const double> sample) const {
  validate_sample(sample, spec_.degree);
  const double u = evaluate(sample, spec_);
  const auto h1v = h1_values(sample);
  CompensatedSum main;
  for (double v : h1v) main += v;
  CompensatedSum r;
  r += u;
  r += -expected_u();
  r += -main.value() / static_cast<double>(n());
  r += -remainder_u(sample);
  return std::abs(r.value());
}

double DecompContext::h1_variance(int i) const {
  if (i < 1 || i > n()) throw InvalidInput("index outside [1, n]");
  if (!model_->continuous()) {
    Cache cache;
    const auto& law = model_->law(i);
    CompensatedSum m1;
    std::vector<double> values(law.support.size());
    for (std::size_t k = 0; k < law.support.size(); ++k) {
      values[k] = h1_cached(i, law.support[k], &cache);
      m1 += law.probabilities[k] * values[k];
    }
    CompensatedSum m2;
    for (std::size_t k = 0; k < values.size(); ++k)
      m2 += law.probabilities[k] * (values[k] - m1.value()) * (values[k] - m1.value());
    return m2.value();
  }
  if (model_->family() == Family::t_location && rank_) {
    const auto rule = model_->expectation_rule(i);
    std::vector<double> values(rule.nodes.size());
    CompensatedSum m1;
    for (std::size_t k = 0; k < values.size(); ++k) {
      values[k] = h1_cached(i, rule.nodes[k], nullptr);
      m1 += rule.weights[k] * values[k];
    }
    CompensatedSum m2;
    for (std::size_t k = 0; k < values.size(); ++k)
      m2 += rule.weights[k] * (values[k] - m1.value()) * (values[k] - m1.value());
    return m2.value();
  }
  Cache cache;
  const double tol = 1e-9;
  const double mean = model_->expect(i, [&](double x) { return h1_cached(i, x, &cache); }, tol);
  return model_->expect(
      i,
      [&](double x) {
        const double d = h1_cached(i, x, &cache) - mean;
        return d * d;
      },
      tol);
}

double DecompContext::main_term_variance() const {
  CompensatedSum s;
  for (int i = 1; i <= n(); ++i) s += h1_variance(i);
  return s.value() / (static_cast<double>(n()) * n());
}

ExhaustiveMoments exhaustive_moments(const DecompContext& ctx) {
  const auto& model = ctx.model();
  if (model.continuous()) throw Unsupported("exhaustive moments need a discrete model");
  const int n = model.size();
  double outcomes = 1.0;
  for (int i = 1; i <= n; ++i) outcomes *= static_cast<double>(model.law(i).support.size());
  if (outcomes > 1e6) throw SizeError("too many joint outcomes for exhaustive summation");

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i + 1;
  std::vector<double> prob, u, main, rem;
  for_each_outcome(model, all, [&](std::span<const double> x, double p) {
    prob.push_back(p);
    u.push_back(evaluate(x, ctx.spec()));
    CompensatedSum s;
    for (double v : ctx.h1_values(x)) s += v;
    main.push_back(s.value() / n);
    rem.push_back(ctx.remainder_u(x));
  });

  auto mean_of = [&](const std::vector<double>& v) {
    CompensatedSum s;
    for (std::size_t k = 0; k < v.size(); ++k) s += prob[k] * v[k];
    return s.value();
  };
  auto cov_of = [&](const std::vector<double>& a, double ma, const std::vector<double>& b, double mb) {
    CompensatedSum s;
    for (std::size_t k = 0; k < a.size(); ++k) s += prob[k] * (a[k] - ma) * (b[k] - mb);
    return s.value();
  };
  ExhaustiveMoments out;
  out.mean_u = mean_of(u);
  const double mm = mean_of(main);
  const double mr = mean_of(rem);
  out.var_u = cov_of(u, out.mean_u, u, out.mean_u);
  out.var_main = cov_of(main, mm, main, mm);
  out.var_remainder = cov_of(rem, mr, rem, mr);
  out.cov_main_remainder = cov_of(main, mm, rem, mr);
  return out;
}

double iid_kendall_main_variance(int n) {
  if (n < 2) throw InvalidInput("n must be at least 2");
  const double nd = n;
  return (nd + 1.0) / (36.0 * nd * (nd - 1.0));
}

}  // namespace wustat
