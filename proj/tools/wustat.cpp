// wustat: Monte Carlo studies and scenario diagnostics for weighted
// U-statistics.
//
//   wustat clt       --stat kendall --family gaussian --n 100 --rn 0 --reps 5000 --seed 1 --out clt.csv
//   wustat boot      --method efron --stat kendall --n 50 --rn 3 --reps 5000 --boot 2000 --seed 1 --out boot.csv
//   wustat diagnose  --config scenario.json --out report.json

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "wustat/decomp.hpp"
#include "wustat/errors.hpp"
#include "wustat/sim.hpp"
#include "wustat/weights.hpp"

using namespace wustat;
using nlohmann::json;

namespace {

struct StudyArgs {
  std::string stat = "kendall";
  std::string family = "gaussian";
  int n = 50;
  double rn = 0.0;
  int reps = kDefaultReps;
  int truth_reps = 0;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  bool timing = false;
  bool full_scale = false;
  std::vector<double> levels{0.80, 0.95};
  std::string method = "efron";
  int boot = 0;
  int block = 0;
  double hn = 0.0;
};

void add_common(CLI::App* cmd, StudyArgs& a) {
  cmd->add_option("--stat", a.stat, "kendall | ap")->check(CLI::IsMember({"kendall", "ap"}));
  cmd->add_option("--family", a.family, "gaussian | t5")->check(CLI::IsMember({"gaussian", "t5", "t"}));
  cmd->add_option("--n", a.n, "sample size")->required();
  cmd->add_option("--rn", a.rn, "heterogeneity R_n (location spread)")->required();
  cmd->add_option("--reps", a.reps, "Monte Carlo replications");
  cmd->add_option("--seed", a.seed, "master seed")->required();
  cmd->add_option("--out", a.out, "CSV output path")->required();
  cmd->add_option("--threads", a.threads, "worker threads (0 = all); results do not depend on it");
  cmd->add_option("--levels", a.levels, "confidence levels")->expected(1, 2);
  cmd->add_flag("--timing", a.timing, "record runtime_ms (makes output non-reproducible)");
  cmd->add_flag("--full-scale", a.full_scale, "use 50,000 replications");
}

ScenarioConfig to_config(const StudyArgs& a, StudyMode mode) {
  ScenarioConfig c;
  c.mode = mode;
  c.statistic = parse_rank_stat(a.stat);
  c.family = parse_scenario_family(a.family);
  c.n = a.n;
  c.rn = a.rn;
  c.reps = a.full_scale ? kFullScaleReps : a.reps;
  c.truth_reps = a.truth_reps;
  c.seed = a.seed;
  c.threads = a.threads;
  c.record_timing = a.timing;
  c.levels = a.levels;
  if (mode == StudyMode::bootstrap) {
    c.method = parse_method(a.method);
    c.boot = a.boot;
    c.block = a.block;
    c.hn = a.hn;
  }
  validate(c);
  return c;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s.precision(4);
  s << *v;
  return s.str();
}

void report(const ScenarioResult& r) {
  const auto& c = r.config;
  std::cout << to_string(c.mode) << " " << to_string(c.statistic) << " " << to_string(c.family) << " n=" << c.n
            << " rn=" << c.rn;
  if (c.mode == StudyMode::bootstrap) {
    std::cout << " method=" << method_name(c.method) << " boot=" << c.boot;
    if (c.method == ResamplingMethod::moving_block) std::cout << " block=" << c.block << " hn=" << c.hn;
  }
  std::cout << "\n  E(U_n)=" << r.e_un << " Var(U_n)=" << r.var_truth;
  if (c.mode == StudyMode::clt)
    std::cout << "  CvM p=" << fmt(r.p_cvm) << " L p=" << fmt(r.p_lilliefors);
  else
    std::cout << "  rel_bias=" << fmt(r.rel_bias);
  std::cout << "  cov80=" << fmt(r.cov80) << " cov95=" << fmt(r.cov95) << "\n";
  if (r.degenerate > 0) std::cout << "  degenerate replications (zero variance estimate): " << r.degenerate << "\n";
}

json diagnose(const ScenarioConfig& c) {
  const auto model = make_scenario(c.family, c.n, c.rn, c.seed);
  const auto spec = rank_spec(c.statistic);
  json out;
  out["scenario"] = json::parse(to_json(resolved(c)));
  out["model"] = {{"family", to_string(c.family)}, {"n", c.n}, {"rn", c.rn}, {"df", 5.0}};

  json w;
  for (auto [K, q] : {std::pair{2, 2}, {2, 1}, {3, 1}}) {
    const auto a = average_weight(spec, c.n, K, q);
    w["A" + std::to_string(K) + std::to_string(q)] = {
        {"power_of_n", a.value}, {"exact_cardinality", a.total / a.cardinality}, {"cardinality", a.cardinality}};
  }
  out["weights"] = w;

  DecompContext ctx(model, spec);
  const double V = ctx.main_term_variance();
  out["decomposition"] = {{"expected_u", ctx.expected_u()}, {"main_term_variance", V}};

  std::optional<HeterogeneityReport> cond;
  json het;
  if (c.n <= kHeterogeneityGuard && V > 0.0) {
    cond = condition_report(ctx);
    het = {{"M1", cond->M1}, {"M2", cond->M2}};
  } else {
    het = {{"M1", nullptr}, {"M2", nullptr}, {"skipped", "n exceeds the heterogeneity scan guard"}};
  }
  out["heterogeneity"] = het;
  if (cond) {
    out["condition"] = {{"M", cond->M},
                        {"V", cond->V},
                        {"sigma2", cond->sigma2},
                        {"sigma2_from_main_term", cond->sigma2_from_main_term},
                        {"ratio13", cond->ratio13},
                        {"ratio14", cond->ratio14},
                        {"ratio_boot", cond->ratio_boot}};
  } else if (V > 0.0) {
    const double nd = c.n;
    const double A22 = w["A22"]["power_of_n"], A31 = w["A31"]["power_of_n"];
    out["condition"] = {{"M", 1.0},
                        {"V", V},
                        {"ratio13", A22 / (nd * nd * V)},
                        {"ratio14", A31 / (nd * nd * std::pow(V, 1.5))},
                        {"ratio_boot", nullptr}};
  }

  TailParameters tp;
  if (c.family == ScenarioFamily::t5) {
    tp.regime = TailRegime::heavy;
    tp.b1 = 6.0;
    tp.b2 = 3.0;
    tp.c1 = 0.01;
    tp.c2 = 1.0;
  } else {
    tp.c1 = 0.05;
  }
  if (c.n >= 3) {
    const auto t = tail_diagnostics(model, tp);
    out["tail"] = {{"regime", t.regime == TailRegime::heavy ? "heavy" : "light"},
                   {"R_n", t.rn},
                   {"rho_n", t.rho_n},
                   {"b1", t.b1},
                   {"b2", t.b2},
                   {"c1", t.c1},
                   {"c2", t.c2},
                   {"t0", t.t0},
                   {"lambda", t.lambda},
                   {"K3", t.k3},
                   {"K4", t.k4},
                   {"lhs", t.lhs},
                   {"rhs_kendall", t.rhs_kendall},
                   {"rhs_ap", t.rhs_ap},
                   {"satisfied_kendall", t.satisfied_kendall},
                   {"satisfied_ap", t.satisfied_ap},
                   {"tail_bounds_hold", t.tail_bounds_hold}};
  }
  if (c.mode == StudyMode::bootstrap && c.method == ResamplingMethod::moving_block) {
    const auto r = resolved(c);
    out["moving_block"] = {{"block", r.block}, {"hn", r.hn}, {"hn_source", c.hn == 0.0 ? "default n/b" : "given"}};
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted U-statistics: CLT and bootstrap studies, scenario diagnostics"};
  app.require_subcommand(1);

  StudyArgs clt_args;
  auto* clt = app.add_subcommand("clt", "normality and coverage of U_n over Monte Carlo replications");
  add_common(clt, clt_args);

  StudyArgs boot_args;
  auto* boot = app.add_subcommand("boot", "relative bias and coverage of a bootstrap variance estimator");
  add_common(boot, boot_args);
  boot->add_option("--method", boot_args.method, "efron | mainterm | movingblock")
      ->required()
      ->check(CLI::IsMember({"efron", "mainterm", "movingblock"}));
  boot->add_option("--boot", boot_args.boot, "replicates per row (per block); default 2000, or 200 for movingblock");
  boot->add_option("--block", boot_args.block, "block length b (default n/5)");
  boot->add_option("--hn", boot_args.hn, "moving-block scale h_n (default n/b)");
  boot->add_option("--truth-reps", boot_args.truth_reps, "rows in the independent Var(U_n) batch");

  std::string config_path, report_path;
  auto* diag = app.add_subcommand("diagnose", "average weights, heterogeneity and tail report for a scenario");
  diag->add_option("--config", config_path, "scenario JSON")->required();
  diag->add_option("--out", report_path, "JSON report path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*clt || *boot) {
      const bool is_clt = static_cast<bool>(*clt);
      const auto& a = is_clt ? clt_args : boot_args;
      const auto config = to_config(a, is_clt ? StudyMode::clt : StudyMode::bootstrap);
      const auto result = is_clt ? run_clt_study(config) : run_bootstrap_study(config);
      report(result);
      if (!is_clt && config.method == ResamplingMethod::moving_block && a.hn == 0.0)
        std::cout << "  note: h_n defaults to n/b\n";
      emit_csv(std::span<const ScenarioResult>(&result, 1), a.out);
    } else {
      const auto config = parse_config_json(read_file(config_path));
      const auto out = diagnose(config);
      std::ofstream f(report_path, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot open '" + report_path + "' for writing");
      f << out.dump(2) << "\n";
      std::cout << out.dump(2) << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
