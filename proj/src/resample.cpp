#include "wustat/resample.hpp"

#include <cmath>

#include "wustat/errors.hpp"
#include "wustat/normal.hpp"
#include "wustat/numeric.hpp"
#include "wustat/parallel.hpp"

namespace wustat {
namespace {

constexpr std::uint64_t kResampleDomain = 0x7265'7361'6d70'6c65ull;  // "resample"
constexpr std::uint64_t kMainTermDomain = 0x6d61'696e'7465'726dull;  // "mainterm"

struct Spread {
  double mean = 0.0;
  double variance = 0.0;  // divisor B - 1
  double mc_std_error = 0.0;
};

Spread spread(std::span<const double> v) {
  const double B = static_cast<double>(v.size());
  CompensatedSum s1;
  for (double x : v) s1 += x;
  Spread out;
  out.mean = s1.value() / B;
  CompensatedSum s2, s4;
  for (double x : v) {
    const double d = x - out.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  out.variance = s2.value() / (B - 1.0);
  const double m4 = s4.value() / B;
  out.mc_std_error = std::sqrt(std::max(0.0, m4 - out.variance * out.variance) / B);
  return out;
}

double population_variance(std::span<const double> v) {
  CompensatedSum s1;
  for (double x : v) s1 += x;
  const double mean = s1.value() / static_cast<double>(v.size());
  CompensatedSum s2;
  for (double x : v) s2 += (x - mean) * (x - mean);
  return s2.value() / static_cast<double>(v.size());
}

// Scratch state owned by one worker.
struct Evaluator {
  const UStatSpec* spec;
  RankWorkspace rank;
  std::vector<double> draw;

  double operator()(std::span<const double> x) {
    if (spec->rank) return rank.evaluate(*spec->rank, x);
    return eval_weighted_ustat(x, *spec);
  }
};

void check_replicates(int B) {
  if (B < 2) throw InvalidPlan("at least two replicates are required");
}

// U* for replicate `index` of `stream`, resampling the values in `pool`.
double replicate_u(Evaluator& eval, std::span<const double> pool, const Stream& stream, std::uint64_t index) {
  Generator g(stream.child(index));
  const std::size_t b = pool.size();
  eval.draw.resize(b);
  for (std::size_t k = 0; k < b; ++k) eval.draw[k] = pool[g.below(b)];
  return eval(eval.draw);
}

std::vector<Evaluator> make_evaluators(const UStatSpec& spec, int threads) {
  return std::vector<Evaluator>(static_cast<std::size_t>(resolve_threads(threads)), Evaluator{&spec, {}, {}});
}

}  // namespace

ResamplingPlan efron_plan(int replicates, std::uint64_t seed) {
  ResamplingPlan p;
  p.method = ResamplingMethod::efron;
  p.replicates = replicates;
  p.seed = seed;
  return p;
}

ResamplingPlan moving_block_plan(int block, int replicates, std::uint64_t seed, double scale) {
  ResamplingPlan p;
  p.method = ResamplingMethod::moving_block;
  p.block = block;
  p.replicates = replicates;
  p.seed = seed;
  p.scale = scale;
  return p;
}

Stream resampling_stream(std::uint64_t seed) { return Stream(seed, kResampleDomain); }

VarianceEstimate efron_variance(std::span<const double> sample, const UStatSpec& spec, const ResamplingPlan& plan) {
  return efron_variance(sample, spec, plan, resampling_stream(plan.seed));
}

VarianceEstimate efron_variance(std::span<const double> sample, const UStatSpec& spec, const ResamplingPlan& plan,
                                const Stream& stream) {
  if (plan.method != ResamplingMethod::efron) throw InvalidPlan("efron_variance needs an efron plan");
  check_replicates(plan.replicates);
  validate_sample(sample, spec.degree);
  std::vector<double> u(static_cast<std::size_t>(plan.replicates));
  auto evals = make_evaluators(spec, plan.threads);
  parallel_for(u.size(), plan.threads,
               [&](std::size_t r, int w) { u[r] = replicate_u(evals[w], sample, stream, r); });
  const auto s = spread(u);
  return {s.variance, plan, s.mc_std_error};
}

VarianceEstimate exact_bootstrap_variance(std::span<const double> sample, const UStatSpec& spec) {
  const int n = static_cast<int>(sample.size());
  if (n > kExactBootstrapMaxN || spec.degree > kExactBootstrapMaxDegree)
    throw SizeError("exact bootstrap enumeration is limited to n <= 6 and m <= 3");
  validate_sample(sample, spec.degree);
  std::size_t total = 1;
  for (int k = 0; k < n; ++k) total *= static_cast<std::size_t>(n);
  std::vector<double> u(total);
  Evaluator eval{&spec, {}, std::vector<double>(n)};
  std::vector<int> idx(n, 0);
  for (std::size_t r = 0; r < total; ++r) {
    for (int k = 0; k < n; ++k) eval.draw[k] = sample[idx[k]];
    u[r] = eval(eval.draw);
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[k] < n) break;
      idx[k] = 0;
    }
  }
  ResamplingPlan plan;
  plan.method = ResamplingMethod::exact_oracle;
  plan.replicates = static_cast<int>(total);
  return {population_variance(u), plan, 0.0};
}

MainTermBootstrap main_term_bootstrap(std::span<const double> h1_values, int replicates, std::uint64_t seed) {
  return main_term_bootstrap(h1_values, replicates, Stream(seed, kMainTermDomain));
}

MainTermBootstrap main_term_bootstrap(std::span<const double> h1_values, int replicates, const Stream& stream) {
  check_replicates(replicates);
  if (h1_values.size() < 2) throw InvalidInput("main-term bootstrap needs at least two values");
  validate_sample(h1_values, 2);
  const std::size_t n = h1_values.size();
  CompensatedSum base;
  for (double v : h1_values) base += v;
  const double center = base.value() / static_cast<double>(n);
  MainTermBootstrap out;
  out.centered_means.resize(static_cast<std::size_t>(replicates));
  for (int r = 0; r < replicates; ++r) {
    Generator g(stream.child(static_cast<std::uint64_t>(r)));
    CompensatedSum s;
    for (std::size_t k = 0; k < n; ++k) s += h1_values[g.below(n)];
    out.centered_means[r] = s.value() / static_cast<double>(n) - center;
  }
  const auto sp = spread(out.centered_means);
  out.variance = sp.variance;
  out.mc_std_error = sp.mc_std_error;
  return out;
}

namespace {

void check_block(int block, int n, int m) {
  if (block <= m || block > n) throw InvalidPlan("block length must satisfy m < b <= n");
}

double block_scale(double scale, int n, int block) {
  if (scale < 0.0 || !std::isfinite(scale)) throw InvalidPlan("h_n must be positive");
  return scale == 0.0 ? static_cast<double>(n) / block : scale;
}

}  // namespace

VarianceEstimate moving_block_variance(std::span<const double> sample, const UStatSpec& spec,
                                       const ResamplingPlan& plan) {
  return moving_block_variance(sample, spec, plan, resampling_stream(plan.seed));
}

VarianceEstimate moving_block_variance(std::span<const double> sample, const UStatSpec& spec,
                                       const ResamplingPlan& plan, const Stream& stream) {
  if (plan.method != ResamplingMethod::moving_block) throw InvalidPlan("moving_block_variance needs a moving-block plan");
  check_replicates(plan.replicates);
  validate_sample(sample, spec.degree);
  const int n = static_cast<int>(sample.size());
  const int b = plan.block;
  check_block(b, n, spec.degree);
  ResamplingPlan resolved = plan;
  resolved.scale = block_scale(plan.scale, n, b);

  const std::size_t blocks = static_cast<std::size_t>(n - b + 1);
  const std::size_t B = static_cast<std::size_t>(plan.replicates);
  std::vector<double> u(blocks * B);
  auto evals = make_evaluators(spec, plan.threads);
  parallel_for(u.size(), plan.threads, [&](std::size_t t, int w) {
    const std::size_t i = t / B;
    u[t] = replicate_u(evals[w], sample.subspan(i, static_cast<std::size_t>(b)), stream, t);
  });
  CompensatedSum var, se2;
  for (std::size_t i = 0; i < blocks; ++i) {
    const auto s = spread(std::span<const double>(u).subspan(i * B, B));
    var += s.variance;
    se2 += s.mc_std_error * s.mc_std_error;
  }
  const double denom = resolved.scale * static_cast<double>(blocks);
  return {var.value() / denom, resolved, std::sqrt(se2.value()) / denom};
}

VarianceEstimate exact_moving_block_variance(std::span<const double> sample, const UStatSpec& spec, int block,
                                             double scale) {
  validate_sample(sample, spec.degree);
  const int n = static_cast<int>(sample.size());
  check_block(block, n, spec.degree);
  ResamplingPlan plan;
  plan.method = ResamplingMethod::exact_oracle;
  plan.block = block;
  plan.scale = block_scale(scale, n, block);
  CompensatedSum var;
  for (int i = 0; i + block <= n; ++i)
    var += exact_bootstrap_variance(sample.subspan(static_cast<std::size_t>(i), static_cast<std::size_t>(block)), spec)
               .value;
  return {var.value() / (plan.scale * (n - block + 1)), plan, 0.0};
}

std::pair<double, double> normal_ci(double point, double variance, double level) {
  if (!(level > 0.0 && level < 1.0)) throw RangeError("confidence level must lie in (0, 1)");
  if (!(variance >= 0.0)) throw InvalidInput("variance must be non-negative");
  const double half = normal_quantile(0.5 * (1.0 + level)) * std::sqrt(variance);
  return {point - half, point + half};
}

}  // namespace wustat
