// bcm_calib: generate traces, run estimators, benchmark grids, aggregate reports.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcm/bcm.hpp"

namespace {

using nlohmann::json;

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty() || out_path == "-") std::cout << text;
  else bcm::write_file(out_path, text);
}

struct GenerateArgs {
  std::string scenario = "full";
  std::size_t n = 100, t = 64, m = 4, k = 0;
  double epsilon = 0.25, mu = 0.1, rho = 16.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const auto kind = bcm::parse_scenario(a.scenario);
  bcm::ModelParams p;
  p.epsilon = a.epsilon;
  p.mu = a.mu;
  p.rho = a.rho;
  p.n_agents = a.n;
  p.n_steps = a.t;
  p.edges_per_step = a.m;
  p.proxies_per_step = a.k;
  p.validate();
  if (kind == bcm::ScenarioKind::noisy && a.k == 0)
    throw std::invalid_argument("--scenario noisy requires --k > 0: without proxies X0 is not identifiable");
  const auto trace = bcm::simulate_trace(p, a.seed);
  const std::string digest = bcm::save_trace(a.out, trace, kind);
  std::cout << "wrote " << a.out << " (" << trace.schedule.size() << " interactions, " << trace.proxies.size()
            << " proxies)\ndigest " << digest << "\n";
  return 0;
}

struct EstimateArgs {
  std::string trace;
  std::string method = "ml";
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t n_simulations = 200;
  std::string config;
  std::string out;
  bool omit_timing = false;
};

int cmd_estimate(const EstimateArgs& a) {
  const auto method = bcm::parse_method(a.method);
  const auto file = bcm::load_trace(a.trace);
  const auto kind = a.scenario.empty() ? file.scenario : bcm::parse_scenario(a.scenario);
  const auto obs = bcm::observe(file.trace, kind);

  json overrides = json::object();
  if (!a.config.empty()) overrides = json::parse(bcm::read_file(a.config));

  json record;
  record["method"] = std::string(bcm::to_string(method));
  record["scenario"] = std::string(bcm::to_string(kind));
  record["trace_seed"] = file.trace.seed;
  record["seed"] = a.seed;

  bcm::EstimationResult r;
  if (method == bcm::Method::ml) {
    auto cfg = bcm::default_optimizer_config(kind);
    if (overrides.contains("optimizer") && overrides["optimizer"].contains(std::string(bcm::to_string(kind))))
      cfg = bcm::optimizer_from_json(overrides["optimizer"][std::string(bcm::to_string(kind))], cfg);
    r = bcm::estimate_ml(obs, file.trace.params, cfg, a.seed);
    record["config"] = bcm::optimizer_to_json(cfg);
  } else {
    bcm::MsmConfig cfg;
    cfg.n_simulations = a.n_simulations;
    cfg.seed = a.seed;
    r = bcm::estimate_msm(obs, file.trace.params, cfg);
    record["config"] = {{"n_simulations", cfg.n_simulations},
                        {"epsilon_range", {cfg.epsilon_range.lo, cfg.epsilon_range.hi}}};
    record["note"] = "simulated moments do not estimate the latent X0";
  }
  record["epsilon_hat"] = r.epsilon_hat;
  record["x0_hat"] = r.x0_hat ? json(*r.x0_hat) : json(nullptr);
  record["reflected"] = r.reflected;
  record["loss_history"] = r.loss_history;
  record["epochs_run"] = r.epochs_run;
  record["converged"] = r.converged;
  record["degenerate"] = r.degenerate;
  record["wall_time_s"] = a.omit_timing ? json(nullptr) : json(r.wall_time_s);
  if (r.x0_hat) {
    record["r2"] = bcm::r_squared(*r.x0_hat, file.trace.x0);
    record["mae"] = bcm::mae(*r.x0_hat, file.trace.x0);
  }
  emit(a.out, record.dump(2) + "\n");
  return 0;
}

struct BenchmarkArgs {
  std::string config;
  std::string out = "benchmark.csv";
  std::string summary;
  std::size_t workers = 0;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_simulations;
  bool omit_timing = false;
  bool quiet = false;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  auto grid = bcm::grid_from_json(json::parse(bcm::read_file(a.config)));
  if (a.seed) grid.master_seed = *a.seed;
  if (a.n_simulations) grid.msm.n_simulations = *a.n_simulations;
  grid.validate();
  const std::size_t workers = a.workers ? a.workers : std::max(1u, std::thread::hardware_concurrency());
  const auto rows = bcm::run_benchmark(grid, workers, [&](std::size_t done, std::size_t total) {
    if (!a.quiet && (done % 50 == 0 || done == total)) std::cerr << "\r" << done << "/" << total << " traces" << std::flush;
  });
  if (!a.quiet) std::cerr << "\n";
  bcm::write_file(a.out, bcm::benchmark_csv(rows, !a.omit_timing));
  const std::string summary_path = a.summary.empty() ? a.out + ".summary.json" : a.summary;
  bcm::write_file(summary_path, bcm::benchmark_summary(rows, !a.omit_timing).dump(2) + "\n");
  std::size_t failures = 0;
  for (const auto& r : rows) failures += !r.error.empty();
  std::cout << "wrote " << rows.size() << " rows to " << a.out << " and summary to " << summary_path;
  if (failures) std::cout << " (" << failures << " failed rows)";
  std::cout << "\n";
  return 0;
}

int cmd_report(const std::string& input, const std::string& out) {
  const auto table = bcm::parse_csv(bcm::read_file(input));
  emit(out, bcm::report_csv(table));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration toolkit for the stochastic bounded-confidence opinion model"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Simulate a trace and write it to a trace file");
  g->add_option("--scenario", gen.scenario, "full|partial|noisy")->check(CLI::IsMember({"full", "partial", "noisy"}));
  g->add_option("--n", gen.n, "number of agents");
  g->add_option("--t", gen.t, "number of timesteps");
  g->add_option("--m", gen.m, "interactions per timestep");
  g->add_option("--k", gen.k, "opinion proxies per timestep");
  g->add_option("--epsilon", gen.epsilon, "confidence bound");
  g->add_option("--mu", gen.mu, "convergence rate");
  g->add_option("--rho", gen.rho, "sigmoid steepness");
  g->add_option("--seed", gen.seed, "trace seed");
  g->add_option("--out", gen.out, "output trace file")->required();

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate epsilon from a trace file");
  e->add_option("--trace", est.trace, "input trace file")->required();
  e->add_option("--method", est.method, "ml|msm")->check(CLI::IsMember({"ml", "msm"}));
  e->add_option("--scenario", est.scenario, "override the scenario stored in the trace file")
      ->check(CLI::IsMember({"full", "partial", "noisy"}));
  e->add_option("--seed", est.seed, "estimator master seed");
  e->add_option("--n-simulations", est.n_simulations, "MSM simulation budget");
  e->add_option("--config", est.config, "JSON file with optimizer overrides");
  e->add_option("--out", est.out, "result file (stdout if omitted)");
  e->add_flag("--omit-timing", est.omit_timing, "write wall_time_s as null");

  BenchmarkArgs bench;
  std::uint64_t bench_seed = 0;
  std::size_t bench_sims = 0;
  auto* b = app.add_subcommand("benchmark", "Run an experiment grid");
  b->add_option("--config", bench.config, "grid definition (JSON)")->required();
  b->add_option("--out", bench.out, "results CSV");
  b->add_option("--summary", bench.summary, "summary JSON (default: <out>.summary.json)");
  b->add_option("--workers", bench.workers, "worker threads (default: hardware concurrency)");
  auto* seed_opt = b->add_option("--seed", bench_seed, "override the master seed");
  auto* sims_opt = b->add_option("--n-simulations", bench_sims, "override the MSM simulation budget");
  b->add_flag("--omit-timing", bench.omit_timing, "leave wall_time_s empty so reruns are byte-identical");
  b->add_flag("--quiet", bench.quiet, "no progress output");

  std::string report_in, report_out;
  auto* r = app.add_subcommand("report", "Aggregate a benchmark CSV into plot-ready tables");
  r->add_option("--input", report_in, "benchmark CSV")->required();
  r->add_option("--out", report_out, "output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*e) return cmd_estimate(est);
    if (*b) {
      if (*seed_opt) bench.seed = bench_seed;
      if (*sims_opt) bench.n_simulations = bench_sims;
      return cmd_benchmark(bench);
    }
    if (*r) return cmd_report(report_in, report_out);
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 1;
}
