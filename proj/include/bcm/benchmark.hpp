#pragma once

// Experiment grids: trace generation, both estimators, per-row error
// metrics, CSV/JSON emission. Rows come out in grid order regardless of the
// number of workers.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bcm/metrics.hpp"
#include "bcm/model.hpp"
#include "bcm/msm.hpp"
#include "bcm/optimize.hpp"
#include "bcm/rng.hpp"
#include "bcm/scenarios.hpp"

namespace bcm {

enum class Method { ml, msm };

inline std::string_view to_string(Method m) { return m == Method::ml ? "ml" : "msm"; }

inline Method parse_method(std::string_view s) {
  if (s == "ml") return Method::ml;
  if (s == "msm") return Method::msm;
  throw std::invalid_argument("unknown method '" + std::string(s) + "' (expected ml|msm)");
}

struct ExperimentGrid {
  std::vector<ScenarioKind> scenarios{ScenarioKind::full, ScenarioKind::partial, ScenarioKind::noisy};
  std::vector<std::size_t> steps{16, 32, 64, 128};
  std::vector<std::size_t> edges{1, 4, 8};
  std::vector<std::size_t> proxies{4, 16};  ///< only varied for noisy cells
  std::vector<double> epsilons{0.1, 0.2, 0.3, 0.4};
  std::size_t seeds_per_cell = 10;
  std::vector<Method> methods{Method::ml, Method::msm};
  std::uint64_t master_seed = 0;
  std::size_t n_agents = 100;
  double mu = 0.1;
  double rho = 16.0;
  MsmConfig msm{};
  std::map<ScenarioKind, OptimizerConfig> optimizer{{ScenarioKind::full, default_optimizer_config(ScenarioKind::full)},
                                                    {ScenarioKind::partial, default_optimizer_config(ScenarioKind::partial)},
                                                    {ScenarioKind::noisy, default_optimizer_config(ScenarioKind::noisy)}};

  void validate() const {
    if (scenarios.empty() || steps.empty() || edges.empty() || epsilons.empty() || methods.empty())
      throw std::invalid_argument("experiment grid: value lists must be non-empty");
    if (seeds_per_cell < 1) throw std::invalid_argument("experiment grid: seeds_per_cell must be at least 1");
    if (std::ranges::find(scenarios, ScenarioKind::noisy) != scenarios.end() && proxies.empty())
      throw std::invalid_argument("experiment grid: noisy scenario needs a non-empty k list");
    for (auto k : proxies)
      if (k == 0 && std::ranges::find(scenarios, ScenarioKind::noisy) != scenarios.end())
        throw std::invalid_argument("experiment grid: noisy scenario needs k > 0");
    msm.validate();
    for (const auto& [kind, cfg] : optimizer) cfg.validate();
  }
};

struct Cell {
  ScenarioKind scenario;
  std::size_t steps;
  std::size_t edges;
  std::size_t proxies;
  double epsilon;
};

inline std::vector<Cell> expand_cells(const ExperimentGrid& g) {
  std::vector<Cell> cells;
  for (auto sc : g.scenarios)
    for (auto t : g.steps)
      for (auto m : g.edges) {
        const std::vector<std::size_t> ks = sc == ScenarioKind::noisy ? g.proxies : std::vector<std::size_t>{0};
        for (auto k : ks)
          for (auto eps : g.epsilons) cells.push_back({sc, t, m, k, eps});
      }
  return cells;
}

struct BenchmarkRow {
  Cell cell{};
  Method method = Method::ml;
  std::uint64_t seed = 0;
  std::optional<double> epsilon_hat;
  ErrorSummary errors;
  bool converged = false;
  std::string error;
};

inline ModelParams cell_params(const ExperimentGrid& g, const Cell& c) {
  ModelParams p;
  p.epsilon = c.epsilon;
  p.mu = g.mu;
  p.rho = g.rho;
  p.n_agents = g.n_agents;
  p.n_steps = c.steps;
  p.edges_per_step = c.edges;
  p.proxies_per_step = c.proxies;
  return p;
}

/// Runs one estimator on one trace and fills a row. Estimator failures are
/// recorded in the row rather than propagated.
inline BenchmarkRow run_one(const ExperimentGrid& g, const Cell& cell, const Trace& trace, const ObservedData& obs,
                            Method method) {
  BenchmarkRow row;
  row.cell = cell;
  row.method = method;
  row.seed = trace.seed;
  try {
    const std::uint64_t est_seed = derive_seed(trace.seed, {stream::benchmark_estimator});
    EstimationResult r;
    if (method == Method::ml) {
      r = estimate_ml(obs, trace.params, g.optimizer.at(cell.scenario), est_seed);
    } else {
      MsmConfig mc = g.msm;
      mc.seed = est_seed;
      r = estimate_msm(obs, trace.params, mc);
    }
    row.epsilon_hat = r.epsilon_hat;
    row.errors = error_summary(r.epsilon_hat, cell.epsilon, r.wall_time_s);
    row.converged = r.converged;
    if (r.x0_hat) {
      row.errors.r2 = r_squared(*r.x0_hat, trace.x0);
      row.errors.mae = mae(*r.x0_hat, trace.x0);
    }
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// Evaluates every (cell, seed) job on a pool of `workers` threads.
inline std::vector<BenchmarkRow> run_benchmark(const ExperimentGrid& g, std::size_t workers = 1,
                                               const std::function<void(std::size_t, std::size_t)>& progress = {}) {
  g.validate();
  const auto cells = expand_cells(g);
  const std::size_t jobs = cells.size() * g.seeds_per_cell;
  const std::size_t per_job = g.methods.size();
  std::vector<BenchmarkRow> rows(jobs * per_job);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs) return;
      const std::size_t ci = job / g.seeds_per_cell;
      const std::size_t rep = job % g.seeds_per_cell;
      const Cell& cell = cells[ci];
      const std::uint64_t seed = derive_seed(g.master_seed, {stream::benchmark_trace, ci, rep});
      try {
        const Trace trace = simulate_trace(cell_params(g, cell), seed);
        const ObservedData obs = observe(trace, cell.scenario);
        for (std::size_t mi = 0; mi < per_job; ++mi) rows[job * per_job + mi] = run_one(g, cell, trace, obs, g.methods[mi]);
      } catch (const std::exception& e) {
        for (std::size_t mi = 0; mi < per_job; ++mi) {
          auto& r = rows[job * per_job + mi];
          r.cell = cell;
          r.method = g.methods[mi];
          r.seed = seed;
          r.error = e.what();
        }
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) progress(d, jobs);
    }
  };

  workers = std::max<std::size_t>(1, workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

inline const std::vector<std::string>& benchmark_columns() {
  static const std::vector<std::string> cols{"scenario", "T",           "m",           "k",        "epsilon_true",
                                             "method",   "seed",        "epsilon_hat", "abs_error", "rel_error",
                                             "r2",       "mae",         "wall_time_s", "converged", "error"};
  return cols;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// With include_timing=false the wall_time_s column is left empty so that
/// reruns are byte-identical.
inline std::string benchmark_csv(const std::vector<BenchmarkRow>& rows, bool include_timing = true) {
  std::ostringstream out;
  const auto& cols = benchmark_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; };
  for (const auto& r : rows) {
    const bool ok = r.error.empty();
    out << to_string(r.cell.scenario) << ',' << r.cell.steps << ',' << r.cell.edges << ',' << r.cell.proxies << ','
        << format_double(r.cell.epsilon) << ',' << to_string(r.method) << ',' << r.seed << ',' << opt(r.epsilon_hat)
        << ',' << (ok ? format_double(r.errors.abs_error) : "") << ',' << (ok ? opt(r.errors.rel_error) : "") << ','
        << opt(r.errors.r2) << ',' << opt(r.errors.mae) << ','
        << (ok && include_timing ? format_double(r.errors.wall_time_s) : "") << ','
        << (ok ? (r.converged ? "true" : "false") : "") << ',' << csv_escape(r.error) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON summary

inline nlohmann::json aggregate_json(const Aggregate& a) {
  nlohmann::json j{{"n", a.n}, {"mean", a.mean}, {"median", a.median}, {"ci95_low", a.ci95_low},
                   {"ci95_high", a.ci95_high}};
  if (!a.quantiles.empty()) j["q90"] = a.quantiles.front();
  return j;
}

inline nlohmann::json benchmark_summary(const std::vector<BenchmarkRow>& rows, bool include_timing = true) {
  using nlohmann::json;
  struct Acc {
    std::vector<double> abs, rel, r2, mae, time;
    std::size_t failures = 0;
  };
  auto add = [&](Acc& a, const BenchmarkRow& r) {
    if (!r.error.empty()) {
      ++a.failures;
      return;
    }
    a.abs.push_back(r.errors.abs_error);
    if (r.errors.rel_error) a.rel.push_back(*r.errors.rel_error);
    if (r.errors.r2) a.r2.push_back(*r.errors.r2);
    if (r.errors.mae) a.mae.push_back(*r.errors.mae);
    a.time.push_back(r.errors.wall_time_s);
  };
  const std::vector<double> q90{0.9};
  auto emit = [&](const Acc& a) {
    json j;
    j["failures"] = a.failures;
    if (!a.abs.empty()) j["abs_error"] = aggregate_json(summarize(std::span<const double>(a.abs), q90));
    if (!a.rel.empty()) j["rel_error"] = aggregate_json(summarize(std::span<const double>(a.rel), q90));
    if (!a.r2.empty()) j["r2"] = aggregate_json(summarize(std::span<const double>(a.r2)));
    if (!a.mae.empty()) j["mae"] = aggregate_json(summarize(std::span<const double>(a.mae)));
    if (include_timing && !a.time.empty()) j["wall_time_s"] = aggregate_json(summarize(std::span<const double>(a.time)));
    return j;
  };

  // Cells keep grid order; rows of one cell are contiguous.
  json cells = json::array();
  std::map<std::string, Acc> by_method, by_scenario_method;
  for (std::size_t i = 0; i < rows.size();) {
    const Cell& c = rows[i].cell;
    std::map<Method, Acc> per_method;
    std::size_t j = i;
    for (; j < rows.size(); ++j) {
      const Cell& d = rows[j].cell;
      if (d.scenario != c.scenario || d.steps != c.steps || d.edges != c.edges || d.proxies != c.proxies ||
          d.epsilon != c.epsilon)
        break;
      add(per_method[rows[j].method], rows[j]);
      add(by_method[std::string(to_string(rows[j].method))], rows[j]);
      add(by_scenario_method[std::string(to_string(c.scenario)) + "/" + std::string(to_string(rows[j].method))],
          rows[j]);
    }
    for (const auto& [m, acc] : per_method) {
      json cj = emit(acc);
      cj["scenario"] = std::string(to_string(c.scenario));
      cj["T"] = c.steps;
      cj["m"] = c.edges;
      cj["k"] = c.proxies;
      cj["epsilon"] = c.epsilon;
      cj["method"] = std::string(to_string(m));
      cells.push_back(std::move(cj));
    }
    i = j;
  }

  json summary;
  summary["cells"] = std::move(cells);
  for (const auto& [key, acc] : by_method) summary["overall"][key] = emit(acc);
  for (const auto& [key, acc] : by_scenario_method) summary["by_scenario"][key] = emit(acc);
  if (include_timing) {
    for (auto sc : {ScenarioKind::full, ScenarioKind::partial, ScenarioKind::noisy}) {
      const std::string s(to_string(sc));
      auto ml = by_scenario_method.find(s + "/ml");
      auto msm = by_scenario_method.find(s + "/msm");
      if (ml == by_scenario_method.end() || msm == by_scenario_method.end()) continue;
      if (ml->second.time.empty() || msm->second.time.empty()) continue;
      const double t_ml = summarize(std::span<const double>(ml->second.time)).median;
      const double t_msm = summarize(std::span<const double>(msm->second.time)).median;
      if (t_ml > 0.0) summary["time_ratio_msm_over_ml"][s] = t_msm / t_ml;
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Config

inline OptimizerConfig optimizer_from_json(const nlohmann::json& j, OptimizerConfig base) {
  if (j.contains("algorithm")) base.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  base.lr_eps = j.value("lr_eps", base.lr_eps);
  base.lr_x0_multiplier = j.value("lr_x0_multiplier", base.lr_x0_multiplier);
  base.max_epochs = j.value("max_epochs", base.max_epochs);
  base.convergence_tol = j.value("convergence_tol", base.convergence_tol);
  base.convergence_window = j.value("convergence_window", base.convergence_window);
  return base;
}

inline nlohmann::json optimizer_to_json(const OptimizerConfig& c) {
  return {{"algorithm", std::string(to_string(c.algorithm))},
          {"lr_eps", c.lr_eps},
          {"lr_x0_multiplier", c.lr_x0_multiplier},
          {"max_epochs", c.max_epochs},
          {"convergence_tol", c.convergence_tol},
          {"convergence_window", c.convergence_window}};
}

/// Reads a grid definition; absent keys keep their defaults.
inline ExperimentGrid grid_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"scenarios", "T",        "m",  "k",   "epsilon", "seeds_per_cell",
                                           "methods",   "master_seed", "n_agents", "mu", "rho", "msm",
                                           "optimizer"};
  if (!j.is_object()) throw std::invalid_argument("grid config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw std::invalid_argument("grid config: unknown key '" + key + "'");
  ExperimentGrid g;
  if (j.contains("scenarios")) {
    g.scenarios.clear();
    for (const auto& s : j.at("scenarios")) g.scenarios.push_back(parse_scenario(s.get<std::string>()));
  }
  if (j.contains("T")) g.steps = j.at("T").get<std::vector<std::size_t>>();
  if (j.contains("m")) g.edges = j.at("m").get<std::vector<std::size_t>>();
  if (j.contains("k")) g.proxies = j.at("k").get<std::vector<std::size_t>>();
  if (j.contains("epsilon")) g.epsilons = j.at("epsilon").get<std::vector<double>>();
  g.seeds_per_cell = j.value("seeds_per_cell", g.seeds_per_cell);
  if (j.contains("methods")) {
    g.methods.clear();
    for (const auto& m : j.at("methods")) g.methods.push_back(parse_method(m.get<std::string>()));
  }
  g.master_seed = j.value("master_seed", g.master_seed);
  g.n_agents = j.value("n_agents", g.n_agents);
  g.mu = j.value("mu", g.mu);
  g.rho = j.value("rho", g.rho);
  if (j.contains("msm")) {
    const auto& m = j.at("msm");
    g.msm.n_simulations = m.value("n_simulations", g.msm.n_simulations);
    if (m.contains("epsilon_range")) {
      const auto r = m.at("epsilon_range").get<std::vector<double>>();
      if (r.size() != 2) throw std::invalid_argument("msm.epsilon_range must be [lo, hi]");
      g.msm.epsilon_range = {r[0], r[1]};
    }
  }
  if (j.contains("optimizer")) {
    for (const auto& [key, value] : j.at("optimizer").items()) {
      const auto kind = parse_scenario(key);
      g.optimizer[kind] = optimizer_from_json(value, g.optimizer[kind]);
    }
  }
  return g;
}

}  // namespace bcm
