#include "wustat/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "wustat/decomp.hpp"
#include "wustat/errors.hpp"
#include "wustat/gof.hpp"
#include "wustat/normal.hpp"
#include "wustat/numeric.hpp"
#include "wustat/parallel.hpp"

namespace wustat {
namespace {

constexpr std::uint64_t kStudyDomain = 0x7374'7564'79ull;  // "study"
constexpr std::uint64_t kTruthDomain = 0x7472'7574'68ull;  // "truth"

bool same_level(double a, double b) { return std::abs(a - b) < 1e-12; }

bool has_level(const ScenarioConfig& c, double level) {
  return std::any_of(c.levels.begin(), c.levels.end(), [&](double l) { return same_level(l, level); });
}

UStatSpec study_spec(const ScenarioConfig& c) { return rank_spec(c.statistic); }

UnMoments moments(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s += x;
  UnMoments m;
  m.mean = s.value() / static_cast<double>(v.size());
  CompensatedSum ss;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.variance = ss.value() / static_cast<double>(v.size() - 1);
  return m;
}

// Percentage of rows whose interval center +/- z * half_width(r) contains target.
template <class HalfWidth>
double coverage(std::span<const double> centers, double target, double level, HalfWidth&& half_width) {
  const double z = normal_quantile(0.5 * (1.0 + level));
  long hits = 0;
  for (std::size_t r = 0; r < centers.size(); ++r)
    if (std::abs(centers[r] - target) <= z * half_width(r)) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(centers.size());
}

void fill_coverage(ScenarioResult& out, std::span<const double> centers, double target,
                   const std::function<double(std::size_t)>& half_width) {
  if (has_level(out.config, 0.80)) out.cov80 = coverage(centers, target, 0.80, half_width);
  if (has_level(out.config, 0.95)) out.cov95 = coverage(centers, target, 0.95, half_width);
}

class Stopwatch {
 public:
  long long elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

std::string to_string(StudyMode mode) { return mode == StudyMode::clt ? "clt" : "boot"; }

StudyMode parse_study_mode(const std::string& name) {
  if (name == "clt") return StudyMode::clt;
  if (name == "boot" || name == "bootstrap") return StudyMode::bootstrap;
  throw ConfigError("unknown study mode '" + name + "'");
}

std::string method_name(ResamplingMethod method) {
  switch (method) {
    case ResamplingMethod::efron: return "efron";
    case ResamplingMethod::main_term: return "mainterm";
    case ResamplingMethod::moving_block: return "movingblock";
    case ResamplingMethod::exact_oracle: return "exact";
  }
  return "efron";
}

ResamplingMethod parse_method(const std::string& name) {
  if (name == "efron") return ResamplingMethod::efron;
  if (name == "mainterm" || name == "main_term") return ResamplingMethod::main_term;
  if (name == "movingblock" || name == "moving_block") return ResamplingMethod::moving_block;
  throw ConfigError("unknown resampling method '" + name + "'");
}

ScenarioConfig resolved(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  if (c.mode == StudyMode::bootstrap) {
    if (c.boot == 0) c.boot = c.method == ResamplingMethod::moving_block ? kDefaultBlockBoot : kDefaultBoot;
    if (c.method == ResamplingMethod::moving_block) {
      if (c.block == 0) c.block = c.n / 5;
      if (c.hn == 0.0 && c.block > 0) c.hn = static_cast<double>(c.n) / c.block;
    }
    if (c.truth_reps == 0) c.truth_reps = std::max(2 * c.reps, 20000);
  }
  return c;
}

void validate(const ScenarioConfig& raw) {
  const ScenarioConfig c = resolved(raw);
  if (c.n < 2) throw ConfigError("n must be at least 2");
  if (!std::isfinite(c.rn) || c.rn < 0.0) throw ConfigError("rn must be a finite non-negative number");
  if (c.reps < 100) throw ConfigError("reps must be at least 100");
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
  if (c.levels.empty()) throw ConfigError("at least one confidence level is required");
  for (double l : c.levels)
    if (!(l > 0.0 && l < 1.0)) throw ConfigError("confidence levels must lie in (0, 1)");
  if (c.mode == StudyMode::clt) return;
  if (c.method == ResamplingMethod::exact_oracle) throw ConfigError("exact oracle is not a study method");
  if (c.boot < 2) throw ConfigError("boot must be at least 2");
  if (c.truth_reps < c.reps) throw ConfigError("truth_reps must be at least reps");
  if (c.method == ResamplingMethod::moving_block) {
    if (c.block <= 2 || c.block > c.n) throw ConfigError("block must satisfy 2 < block <= n");
    if (!(c.hn > 0.0) || !std::isfinite(c.hn)) throw ConfigError("hn must be positive");
  }
}

ScenarioConfig parse_config_json(const std::string& text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("scenario JSON must be an object");
    ScenarioConfig c;
    static const char* known[] = {"mode", "statistic", "family", "n",    "rn",   "reps",       "boot",
                                  "method", "block",   "hn",     "seed", "levels", "truth_reps", "threads"};
    for (auto it = j.begin(); it != j.end(); ++it)
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
          std::end(known))
        throw ConfigError("unknown scenario key '" + it.key() + "'");
    if (j.contains("mode")) c.mode = parse_study_mode(j.at("mode").get<std::string>());
    if (j.contains("statistic")) {
      try {
        c.statistic = parse_rank_stat(j.at("statistic").get<std::string>());
      } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
      }
    }
    if (j.contains("family")) {
      try {
        c.family = parse_scenario_family(j.at("family").get<std::string>());
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
    if (j.contains("n")) c.n = j.at("n").get<int>();
    if (j.contains("rn")) c.rn = j.at("rn").get<double>();
    if (j.contains("reps")) c.reps = j.at("reps").get<int>();
    if (j.contains("truth_reps")) c.truth_reps = j.at("truth_reps").get<int>();
    if (j.contains("boot")) c.boot = j.at("boot").get<int>();
    if (j.contains("method")) {
      c.method = parse_method(j.at("method").get<std::string>());
      if (!j.contains("mode")) c.mode = StudyMode::bootstrap;
    }
    if (j.contains("block")) c.block = j.at("block").get<int>();
    if (j.contains("hn")) c.hn = j.at("hn").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<double>>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario JSON: ") + e.what());
  }
}

std::string to_json(const ScenarioConfig& c) {
  nlohmann::json j{{"mode", to_string(c.mode)},
                   {"statistic", to_string(c.statistic)},
                   {"family", to_string(c.family)},
                   {"n", c.n},
                   {"rn", c.rn},
                   {"reps", c.reps},
                   {"seed", c.seed},
                   {"levels", c.levels},
                   {"threads", c.threads}};
  if (c.mode == StudyMode::bootstrap) {
    j["method"] = method_name(c.method);
    j["boot"] = c.boot;
    j["truth_reps"] = c.truth_reps;
    if (c.method == ResamplingMethod::moving_block) {
      j["block"] = c.block;
      j["hn"] = c.hn;
    }
  }
  return j.dump(2);
}

Stream study_stream(std::uint64_t seed) { return Stream(seed, kStudyDomain); }

std::vector<double> simulate_row(const DistributionModel& model, const Stream& stream) {
  Generator g(stream);
  std::vector<double> x(static_cast<std::size_t>(model.size()));
  for (int i = 1; i <= model.size(); ++i) x[i - 1] = model.sample(i, g);
  return x;
}

UnMoments simulate_un_moments(const ScenarioConfig& config, int rows, const Stream& stream) {
  const auto model = make_scenario(config.family, config.n, config.rn, config.seed);
  std::vector<double> u(static_cast<std::size_t>(rows));
  std::vector<RankWorkspace> ws(static_cast<std::size_t>(resolve_threads(config.threads)));
  parallel_for(u.size(), config.threads, [&](std::size_t r, int w) {
    u[r] = ws[w].evaluate(config.statistic, simulate_row(model, stream.child(r)));
  });
  return moments(u);
}

ScenarioResult run_clt_study(const ScenarioConfig& config) {
  Stopwatch clock;
  ScenarioConfig c = resolved(config);
  c.mode = StudyMode::clt;
  validate(c);
  const auto model = make_scenario(c.family, c.n, c.rn, c.seed);
  const Stream root = study_stream(c.seed);
  std::vector<double> u(static_cast<std::size_t>(c.reps));
  std::vector<RankWorkspace> ws(static_cast<std::size_t>(resolve_threads(c.threads)));
  parallel_for(u.size(), c.threads, [&](std::size_t r, int w) {
    u[r] = ws[w].evaluate(c.statistic, simulate_row(model, root.child(r)));
  });
  const auto m = moments(u);
  if (!(m.variance > 0.0)) throw DegenerateError("U_n has zero Monte Carlo variance in this scenario");

  ScenarioResult out;
  out.config = c;
  out.e_un = m.mean;
  out.var_truth = m.variance;
  const double sd = std::sqrt(m.variance);
  std::vector<double> z(u.size());
  for (std::size_t r = 0; r < u.size(); ++r) z[r] = (u[r] - m.mean) / sd;
  out.p_cvm = cvm_normality(z).p_value;
  out.p_lilliefors = lilliefors(z).p_value;
  fill_coverage(out, u, m.mean, [sd](std::size_t) { return sd; });
  if (c.record_timing) out.runtime_ms = clock.elapsed_ms();
  return out;
}

ScenarioResult run_bootstrap_study(const ScenarioConfig& config, const BootstrapHooks& hooks) {
  Stopwatch clock;
  ScenarioConfig c = config;
  c.mode = StudyMode::bootstrap;
  c = resolved(c);
  validate(c);
  const auto model = make_scenario(c.family, c.n, c.rn, c.seed);
  const auto spec = study_spec(c);

  const auto truth = simulate_un_moments(c, c.truth_reps, Stream(c.seed, kTruthDomain));
  if (!(truth.variance > 0.0)) throw DegenerateError("U_n has zero Monte Carlo variance in this scenario");

  std::optional<DecompContext> ctx;
  if (c.method == ResamplingMethod::main_term && !hooks.variance_override) {
    if (!model.continuous()) throw Unsupported("main-term bootstrap needs a continuous model with closed-form h1");
    ctx.emplace(model, spec);
  }

  ResamplingPlan plan;
  plan.method = c.method;
  plan.replicates = c.boot;
  plan.block = c.block;
  plan.scale = c.hn;
  plan.seed = c.seed;
  plan.threads = 1;

  const Stream root = study_stream(c.seed);
  const std::size_t R = static_cast<std::size_t>(c.reps);
  std::vector<double> u(R), est(R);
  std::vector<RankWorkspace> ws(static_cast<std::size_t>(resolve_threads(c.threads)));
  parallel_for(R, c.threads, [&](std::size_t r, int w) {
    const Stream row_stream = root.child(r);
    const auto row = simulate_row(model, row_stream);
    u[r] = ws[w].evaluate(c.statistic, row);
    if (hooks.variance_override) {
      est[r] = hooks.variance_override(row, truth.variance);
      return;
    }
    switch (c.method) {
      case ResamplingMethod::efron: est[r] = efron_variance(row, spec, plan, row_stream).value; break;
      case ResamplingMethod::moving_block: est[r] = moving_block_variance(row, spec, plan, row_stream).value; break;
      case ResamplingMethod::main_term:
        est[r] = main_term_bootstrap(ctx->h1_values(row), c.boot, row_stream).variance;
        break;
      case ResamplingMethod::exact_oracle: break;
    }
  });

  ScenarioResult out;
  out.config = c;
  out.e_un = truth.mean;
  out.var_truth = truth.variance;
  CompensatedSum mean_est;
  for (double v : est) {
    mean_est += v;
    if (v == 0.0) ++out.degenerate;
  }
  out.rel_bias = (truth.variance - mean_est.value() / static_cast<double>(R)) / truth.variance;
  fill_coverage(out, u, truth.mean, [&](std::size_t r) { return std::sqrt(std::max(est[r], 0.0)); });
  if (c.record_timing) out.runtime_ms = clock.elapsed_ms();
  return out;
}

ScenarioResult run_study(const ScenarioConfig& config) {
  return config.mode == StudyMode::clt ? run_clt_study(config) : run_bootstrap_study(config);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string optional_number(const std::optional<double>& x) { return x ? number(*x) : std::string(); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const char* column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("CSV: bad number in column ") + column + ": '" + s + "'");
  }
}

std::optional<double> parse_optional(const std::string& s, const char* column) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, column);
}

long long parse_integer(const std::string& s, const char* column) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("CSV: bad integer in column ") + column + ": '" + s + "'");
  }
}

}  // namespace

std::string to_csv(std::span<const ScenarioResult> results) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : results) {
    const auto& c = r.config;
    const bool boot = c.mode == StudyMode::bootstrap;
    const bool block = boot && c.method == ResamplingMethod::moving_block;
    std::vector<std::string> cells{to_string(c.mode),
                                   to_string(c.statistic),
                                   to_string(c.family),
                                   std::to_string(c.n),
                                   number(c.rn),
                                   boot ? method_name(c.method) : "",
                                   std::to_string(c.reps),
                                   boot ? std::to_string(c.boot) : "",
                                   block ? std::to_string(c.block) : "",
                                   block ? number(c.hn) : "",
                                   optional_number(r.p_cvm),
                                   optional_number(r.p_lilliefors),
                                   optional_number(r.rel_bias),
                                   optional_number(r.cov80),
                                   optional_number(r.cov95),
                                   number(r.var_truth),
                                   number(r.e_un),
                                   std::to_string(c.seed),
                                   r.runtime_ms ? std::to_string(*r.runtime_ms) : ""};
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out += ',';
      out += cells[k];
    }
    out += '\n';
  }
  return out;
}

std::vector<ScenarioResult> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("CSV: missing or unexpected header");
  std::vector<ScenarioResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 19) throw ConfigError("CSV: expected 19 columns, got " + std::to_string(f.size()));
    ScenarioResult r;
    auto& c = r.config;
    c.mode = parse_study_mode(f[0]);
    c.statistic = parse_rank_stat(f[1]);
    c.family = parse_scenario_family(f[2]);
    c.n = static_cast<int>(parse_integer(f[3], "n"));
    c.rn = parse_double(f[4], "rn");
    if (!f[5].empty()) c.method = parse_method(f[5]);
    c.reps = static_cast<int>(parse_integer(f[6], "reps"));
    if (!f[7].empty()) c.boot = static_cast<int>(parse_integer(f[7], "boot"));
    if (!f[8].empty()) c.block = static_cast<int>(parse_integer(f[8], "block"));
    if (!f[9].empty()) c.hn = parse_double(f[9], "hn");
    r.p_cvm = parse_optional(f[10], "p_cvm");
    r.p_lilliefors = parse_optional(f[11], "p_lilliefors");
    r.rel_bias = parse_optional(f[12], "rel_bias");
    r.cov80 = parse_optional(f[13], "cov80");
    r.cov95 = parse_optional(f[14], "cov95");
    r.var_truth = parse_double(f[15], "var_truth");
    r.e_un = parse_double(f[16], "e_un");
    try {
      c.seed = std::stoull(f[17]);
    } catch (const std::exception&) {
      throw ConfigError("CSV: bad seed '" + f[17] + "'");
    }
    if (!f[18].empty()) r.runtime_ms = parse_integer(f[18], "runtime_ms");
    out.push_back(std::move(r));
  }
  return out;
}

void emit_csv(std::span<const ScenarioResult> results, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << to_csv(results);
  f.flush();
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace wustat
