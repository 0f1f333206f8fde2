#include "wustat/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wustat/errors.hpp"
#include "wustat/numeric.hpp"

namespace wustat {
namespace {

struct Tuple {
  std::vector<int> indices;
  double weight;
};

std::vector<Tuple> all_tuples(const UStatSpec& spec, int n) {
  const int m = spec.degree;
  std::vector<Tuple> out;
  std::vector<int> t(m);
  std::vector<char> used(n + 1, 0);
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == m) {
      out.push_back({t, std::abs(spec.weight(t, n))});
      return;
    }
    for (int v = 1; v <= n; ++v) {
      if (used[v]) continue;
      used[v] = 1;
      t[pos] = v;
      self(self, pos + 1);
      used[v] = 0;
    }
  };
  rec(rec, 0);
  return out;
}

// Sum of |products| and count over K-tuples whose common index set has at
// least q elements, pruning as soon as the running intersection is too small.
void enumerate_family(const std::vector<Tuple>& tuples, int K, int q, CompensatedSum& total, double& count) {
  std::vector<std::vector<int>> common(K + 1);
  auto rec = [&](auto&& self, int level, double product) -> void {
    if (level == K) {
      total += product;
      count += 1.0;
      return;
    }
    for (const auto& t : tuples) {
      auto& next = common[level + 1];
      if (level == 0) {
        next = t.indices;
      } else {
        next.clear();
        for (int v : common[level])
          if (std::find(t.indices.begin(), t.indices.end(), v) != t.indices.end()) next.push_back(v);
      }
      if (static_cast<int>(next.size()) < q) continue;
      self(self, level + 1, product * t.weight);
    }
  };
  rec(rec, 0, 1.0);
}

// Degree-2 closed forms. With w_i the total |weight| of tuples containing i
// and b_ij = |a(i,j)| + |a(j,i)|, a K-tuple of ordered pairs shares two
// indices only when all pairs span the same set {i, j}, so
//   q = 2: sum_{i<j} b_ij^K
//   q = 1: sum_i w_i^K - sum_{i<j} b_ij^K   (shared pairs are counted twice)
//   q = 0: (sum |a|)^K.
void degree_two_closed_form(const std::vector<double>& abs_a, int n, int K, int q, double& total,
                            double& count) {
  auto at = [&](int i, int j) { return abs_a[static_cast<std::size_t>(i - 1) * n + (j - 1)]; };
  CompensatedSum pair_powers, row_powers, all;
  std::vector<double> w(n, 0.0);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const double b = at(i, j) + at(j, i);
      pair_powers += std::pow(b, K);
      w[i - 1] += b;
      w[j - 1] += b;
      all += b;
    }
  for (double wi : w) row_powers += std::pow(wi, K);
  const double nd = n;
  const double pairs = nd * (nd - 1.0) / 2.0;
  switch (q) {
    case 2:
      total = pair_powers.value();
      count = pairs * std::pow(2.0, K);
      break;
    case 1:
      total = row_powers.value() - pair_powers.value();
      count = nd * std::pow(2.0 * (nd - 1.0), K) - pairs * std::pow(2.0, K);
      break;
    default:
      total = std::pow(all.value(), K);
      count = std::pow(nd * (nd - 1.0), K);
  }
}

}  // namespace

WeightSummary average_weight(const UStatSpec& spec, int n, int K, int q, Normalization normalization,
                             WeightMethod method) {
  const int m = spec.degree;
  if (K < 2) throw InvalidInput("K must be at least 2");
  if (q < 0 || q > m) throw InvalidInput("q must lie in [0, m]");
  if (n < m) throw InvalidInput("n must be at least the degree");
  WeightSummary out;
  out.n = n;
  out.K = K;
  out.q = q;
  out.normalization = normalization;
  const double exponent = q + K * (m - q);
  const double order = std::pow(static_cast<double>(n), exponent);

  if (m == 2 && method == WeightMethod::automatic) {
    std::vector<double> abs_a(static_cast<std::size_t>(n) * n, 0.0);
    int idx[2];
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        if (i == j) continue;
        idx[0] = i;
        idx[1] = j;
        abs_a[static_cast<std::size_t>(i - 1) * n + (j - 1)] = std::abs(spec.weight(idx, n));
      }
    degree_two_closed_form(abs_a, n, K, q, out.total, out.cardinality);
  } else {
    if (order > kEnumerationGuard) throw SizeError("average-weight enumeration guard exceeded");
    const auto tuples = all_tuples(spec, n);
    CompensatedSum total;
    double count = 0.0;
    enumerate_family(tuples, K, q, total, count);
    out.total = total.value();
    out.cardinality = count;
  }
  out.value = out.total / (normalization == Normalization::power_of_n ? order : out.cardinality);
  return out;
}

double sum_weight_identity(int n) {
  if (n < 2) throw InvalidInput("n must be at least 2");
  // The double sum over (j, k) factorizes into the square of the row sum.
  CompensatedSum total;
  for (int i = 1; i <= n; ++i) {
    CompensatedSum row;
    for (int j = 1; j <= n; ++j) {
      if (j < i) row += 1.0 / (i - 1);
      if (j > i) row += -1.0 / (j - 1);
    }
    total += row.value() * row.value();
  }
  return total.value();
}

HeterogeneityMeasures heterogeneity_measures(const DecompContext& ctx) {
  const int n = ctx.n();
  const int m = ctx.degree();
  if (n > kHeterogeneityGuard) throw SizeError("heterogeneity scan guard exceeded");
  HeterogeneityMeasures out;

  // M1: spread of theta over all index vectors.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  if (ctx.closed_form() && m == 2) {
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        if (i == j) continue;
        const int idx[2] = {i, j};
        const double t = ctx.theta(idx);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
  } else {
    if (std::pow(static_cast<double>(n), m) > kEnumerationGuard) throw SizeError("enumeration guard exceeded");
    UStatSpec unit = ctx.spec();
    unit.weight = [](std::span<const int>, int) { return 1.0; };
    for (const auto& t : all_tuples(unit, n)) {
      const double v = ctx.theta(t.indices);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  out.M1 = hi - lo;

  if (m != 2) throw Unsupported("M2 is implemented for degree 2 only");
  if (n < 4) return out;  // the free index has a single admissible value

  const auto& model = ctx.model();
  for (int c = 1; c <= n; ++c) {
    const auto rule = model.expectation_rule(c);
    const std::size_t K = rule.nodes.size();
    // G[p][u][k] = G_p(u; x_k).
    std::vector<std::vector<double>> G[2];
    for (int p = 0; p < 2; ++p) {
      G[p].assign(n + 1, std::vector<double>(K, 0.0));
      for (int u = 1; u <= n; ++u) {
        if (u == c) continue;
        for (std::size_t k = 0; k < K; ++k) G[p][u][k] = ctx.f_l(p + 1, rule.nodes[k], std::span<const int>(&u, 1));
      }
    }
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        for (int s = 1; s <= n; ++s) {
          if (s == c) continue;
          std::vector<double> ws(K);
          for (std::size_t k = 0; k < K; ++k) ws[k] = rule.weights[k] * G[q][s][k];
          double best_lo = std::numeric_limits<double>::infinity();
          double best_hi = -best_lo;
          for (int u = 1; u <= n; ++u) {
            if (u == c || u == s) continue;
            CompensatedSum e;
            const auto& gu = G[p][u];
            for (std::size_t k = 0; k < K; ++k) e += ws[k] * gu[k];
            best_lo = std::min(best_lo, e.value());
            best_hi = std::max(best_hi, e.value());
          }
          out.M2 = std::max(out.M2, best_hi - best_lo);
        }
  }
  return out;
}

HeterogeneityReport condition_report(const DecompContext& ctx, std::optional<double> sigma2) {
  const int n = ctx.n();
  const int m = ctx.degree();
  HeterogeneityReport r;
  if (ctx.spec().rank) {
    r.M = 1.0;
  } else {
    if (std::pow(static_cast<double>(n), m) > kEnumerationGuard) throw SizeError("enumeration guard exceeded");
    UStatSpec unit = ctx.spec();
    unit.weight = [](std::span<const int>, int) { return 1.0; };
    for (const auto& t : all_tuples(unit, n))
      r.M = std::max(r.M, ctx.kernel_expectation(t.indices, [](double h) { return h * h * h * h; }));
  }
  r.V = ctx.main_term_variance();
  if (!(r.V > 0.0)) throw DegenerateError("main-term variance is zero");
  if (sigma2) {
    if (!(*sigma2 > 0.0)) throw DegenerateError("Var(U_n) must be positive");
    r.sigma2 = *sigma2;
  } else {
    r.sigma2 = r.V;
    r.sigma2_from_main_term = true;
  }
  const auto& spec = ctx.spec();
  r.A22 = average_weight(spec, n, 2, 2).value;
  r.A21 = average_weight(spec, n, 2, 1).value;
  r.A31 = average_weight(spec, n, 3, 1).value;
  const auto h = heterogeneity_measures(ctx);
  r.M1 = h.M1;
  r.M2 = h.M2;
  const double nd = n;
  r.ratio13 = r.A22 * std::sqrt(r.M) / (nd * nd * r.V);
  r.ratio14 = r.A31 * std::pow(r.M, 0.75) / (nd * nd * std::pow(r.V, 1.5));
  r.ratio_boot = r.A21 * (r.M1 * r.M1 + r.M2 + 1.0 / nd) / (nd * r.sigma2);
  return r;
}

}  // namespace wustat
