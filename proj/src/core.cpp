#include "wustat/core.hpp"

#include <algorithm>
#include <cmath>

#include "wustat/errors.hpp"
#include "wustat/numeric.hpp"

namespace wustat {

std::string to_string(RankStatKind kind) { return kind == RankStatKind::kendall ? "kendall" : "ap"; }

RankStatKind parse_rank_stat(const std::string& name) {
  if (name == "kendall") return RankStatKind::kendall;
  if (name == "ap") return RankStatKind::ap;
  throw InvalidInput("unknown rank statistic '" + name + "'");
}

double rank_weight(RankStatKind kind, int i, int j, int n) noexcept {
  if (!(j < i)) return 0.0;
  return kind == RankStatKind::kendall ? 1.0 : static_cast<double>(n) / (i - 1);
}

UStatSpec rank_spec(RankStatKind kind) {
  UStatSpec spec;
  spec.degree = 2;
  spec.name = to_string(kind);
  spec.rank = kind;
  spec.weight = [kind](std::span<const int> idx, int n) { return rank_weight(kind, idx[0], idx[1], n); };
  spec.kernel = [](std::span<const double> x) { return x[1] > x[0] ? 1.0 : 0.0; };
  return spec;
}

void validate_sample(std::span<const double> sample, int min_length) {
  if (static_cast<int>(sample.size()) < min_length)
    throw InvalidInput("sample length " + std::to_string(sample.size()) + " is below the required " +
                       std::to_string(min_length));
  for (double x : sample)
    if (!std::isfinite(x)) throw InvalidInput("sample contains a non-finite value");
}

double eval_weighted_ustat(std::span<const double> sample, const UStatSpec& spec) {
  const int n = static_cast<int>(sample.size());
  const int m = spec.degree;
  if (m < 1) throw InvalidInput("degree must be at least 1");
  if (m > n) throw InvalidInput("degree " + std::to_string(m) + " exceeds sample size " + std::to_string(n));
  validate_sample(sample, m);
  if (std::pow(static_cast<double>(n), m) > kEnumerationGuard)
    throw SizeError("n^m exceeds the enumeration guard");

  std::vector<int> idx(m, 0);   // 1-based
  std::vector<double> values(m);
  std::vector<char> used(n + 1, 0);
  CompensatedSum total;
  // Odometer over ordered tuples of distinct indices, lexicographic.
  int depth = 0;
  idx[0] = 0;
  while (depth >= 0) {
    if (idx[depth] > 0) used[idx[depth]] = 0;
    int next = idx[depth] + 1;
    while (next <= n && used[next]) ++next;
    if (next > n) {
      idx[depth] = 0;
      --depth;
      continue;
    }
    idx[depth] = next;
    used[next] = 1;
    if (depth + 1 < m) {
      ++depth;
      idx[depth] = 0;
      continue;
    }
    const double w = spec.weight(idx, n);
    if (w != 0.0) {
      for (int k = 0; k < m; ++k) values[k] = sample[idx[k] - 1];
      total += w * spec.kernel(values);
    }
  }
  double norm = 1.0;
  for (int k = 0; k < m; ++k) norm *= static_cast<double>(n - k);
  return total.value() / norm;
}

namespace {

std::int64_t merge_count(std::span<double> values, std::span<double> scratch) {
  const std::size_t n = values.size();
  if (n < 2) return 0;
  const std::size_t mid = n / 2;
  std::int64_t count = merge_count(values.first(mid), scratch.first(mid)) +
                       merge_count(values.subspan(mid), scratch.subspan(mid));
  std::size_t left = 0;
  std::size_t right = mid;
  std::size_t out = 0;
  while (left < mid && right < n) {
    if (values[left] <= values[right]) {
      scratch[out++] = values[left++];
    } else {
      // Every remaining left element is strictly larger than values[right].
      count += static_cast<std::int64_t>(mid - left);
      scratch[out++] = values[right++];
    }
  }
  while (left < mid) scratch[out++] = values[left++];
  while (right < n) scratch[out++] = values[right++];
  std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n), values.begin());
  return count;
}

}  // namespace

double RankWorkspace::kendall(std::span<const double> sample) {
  const auto n = sample.size();
  values_.assign(sample.begin(), sample.end());
  scratch_.resize(n);
  const auto inversions = merge_count(values_, scratch_);
  return static_cast<double>(inversions) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double RankWorkspace::ap(std::span<const double> sample) {
  const int n = static_cast<int>(sample.size());
  sorted_.assign(sample.begin(), sample.end());
  std::sort(sorted_.begin(), sorted_.end());
  sorted_.erase(std::unique(sorted_.begin(), sorted_.end()), sorted_.end());
  const int ranks = static_cast<int>(sorted_.size());
  tree_.assign(ranks + 1, 0);
  CompensatedSum total;
  for (int i = 1; i <= n; ++i) {
    const int rank =
        static_cast<int>(std::lower_bound(sorted_.begin(), sorted_.end(), sample[i - 1]) - sorted_.begin()) + 1;
    if (i >= 2) {
      int not_greater = 0;
      for (int k = rank; k > 0; k -= k & -k) not_greater += tree_[k];
      const int greater = (i - 1) - not_greater;
      if (greater > 0) total += static_cast<double>(greater) / (i - 1);
    }
    for (int k = rank; k <= ranks; k += k & -k) ++tree_[k];
  }
  return total.value() / (n - 1);
}

std::int64_t count_inversions(std::span<const double> sample) {
  std::vector<double> values(sample.begin(), sample.end());
  std::vector<double> scratch(values.size());
  return merge_count(values, scratch);
}

double kendall_u(std::span<const double> sample) {
  validate_sample(sample, 2);
  RankWorkspace ws;
  return ws.kendall(sample);
}

double ap_u(std::span<const double> sample) {
  validate_sample(sample, 2);
  RankWorkspace ws;
  return ws.ap(sample);
}

double rank_u(RankStatKind kind, std::span<const double> sample) {
  return kind == RankStatKind::kendall ? kendall_u(sample) : ap_u(sample);
}

double tau_from_u(RankStatKind kind, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw RangeError("tau_from_u: u must lie in [0, 1]");
  return kind == RankStatKind::kendall ? 4.0 * u - 1.0 : 2.0 * u - 1.0;
}

double evaluate(std::span<const double> sample, const UStatSpec& spec) {
  if (spec.rank) return rank_u(*spec.rank, sample);
  return eval_weighted_ustat(sample, spec);
}

}  // namespace wustat
