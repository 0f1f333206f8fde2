#pragma once

// Monte Carlo harness for the CLT and bootstrap studies.
//
// Seeding: row r of a study is drawn from stream(seed).child(r) and its
// bootstrap replicates use children of that stream, so a CLT study and a
// bootstrap study with the same seed see the same rows. The "truth" E(U_n)
// and Var(U_n) of a bootstrap study come from an independent batch of rows
// on a separate stream domain.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wustat/core.hpp"
#include "wustat/distributions.hpp"
#include "wustat/resample.hpp"

namespace wustat {

enum class StudyMode { clt, bootstrap };

std::string to_string(StudyMode mode);
StudyMode parse_study_mode(const std::string& name);
/// "efron", "mainterm", "movingblock" (also accepts "main_term", "moving_block").
std::string method_name(ResamplingMethod method);
ResamplingMethod parse_method(const std::string& name);

inline constexpr int kDefaultReps = 5000;
inline constexpr int kFullScaleReps = 50000;
inline constexpr int kDefaultBoot = 2000;
inline constexpr int kDefaultBlockBoot = 200;

struct ScenarioConfig {
  StudyMode mode = StudyMode::clt;
  RankStatKind statistic = RankStatKind::kendall;
  ScenarioFamily family = ScenarioFamily::gaussian;
  int n = 50;
  double rn = 0.0;
  int reps = kDefaultReps;
  /// Rows in the independent truth batch of a bootstrap study; 0 selects max(2 reps, 20000).
  int truth_reps = 0;
  ResamplingMethod method = ResamplingMethod::efron;
  /// Replicates per row (per block for moving_block); 0 selects the method default.
  int boot = 0;
  /// Moving-block length; 0 selects n / 5.
  int block = 0;
  /// Moving-block h_n; 0 selects n / b.
  double hn = 0.0;
  std::vector<double> levels{0.80, 0.95};
  std::uint64_t seed = 0;
  /// Worker threads for replications; 0 uses all hardware threads. Never affects results.
  int threads = 0;
  bool record_timing = false;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Throws ConfigError on any invalid field.
void validate(const ScenarioConfig& config);

/// Copy with every 0 "default" field replaced by its value.
ScenarioConfig resolved(const ScenarioConfig& config);

/// Scenario JSON: {"statistic", "family", "n", "rn", "reps", "boot", "method",
/// "block", "hn", "seed", "levels"}, plus optional "mode", "truth_reps" and "threads".
ScenarioConfig parse_config_json(const std::string& text);
std::string to_json(const ScenarioConfig& config);

struct ScenarioResult {
  ScenarioConfig config;
  std::optional<double> p_cvm;
  std::optional<double> p_lilliefors;
  std::optional<double> rel_bias;
  /// Coverage percentages.
  std::optional<double> cov80;
  std::optional<double> cov95;
  double var_truth = 0.0;
  double e_un = 0.0;
  /// Replications whose variance estimate was exactly zero (bootstrap mode).
  int degenerate = 0;
  std::optional<long long> runtime_ms;

  friend bool operator==(const ScenarioResult&, const ScenarioResult&) = default;
};

/// Mean and variance (divisor N - 1) of U_n over `rows` rows drawn on `stream`.
struct UnMoments {
  double mean = 0.0;
  double variance = 0.0;
};
UnMoments simulate_un_moments(const ScenarioConfig& config, int rows, const Stream& stream);

/// Root stream of the study rows for a seed.
Stream study_stream(std::uint64_t seed);

/// One row X_1..X_n of the scenario model.
std::vector<double> simulate_row(const DistributionModel& model, const Stream& stream);

ScenarioResult run_clt_study(const ScenarioConfig& config);

struct BootstrapHooks {
  /// Replaces the resampling estimator. Receives the row and the Monte Carlo Var(U_n).
  std::function<double(std::span<const double> row, double var_truth)> variance_override;
};

ScenarioResult run_bootstrap_study(const ScenarioConfig& config, const BootstrapHooks& hooks = {});

/// Runs the study selected by config.mode.
ScenarioResult run_study(const ScenarioConfig& config);

inline constexpr const char* kCsvHeader =
    "mode,statistic,family,n,rn,method,reps,boot,block,hn,p_cvm,p_lilliefors,rel_bias,cov80,cov95,var_truth,"
    "e_un,seed,runtime_ms";

std::string to_csv(std::span<const ScenarioResult> results);
std::vector<ScenarioResult> parse_csv(const std::string& text);
void emit_csv(std::span<const ScenarioResult> results, const std::string& path);

}  // namespace wustat
