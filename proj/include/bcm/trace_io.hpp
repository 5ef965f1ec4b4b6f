#pragma once

// Versioned JSON trace files. The trajectory is not stored; it is replayed on
// load and checked against a stored checksum.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "bcm/model.hpp"
#include "bcm/scenarios.hpp"

namespace bcm {

using json = nlohmann::json;

inline constexpr std::string_view kTraceFormat = "bcm-trace";
inline constexpr int kTraceVersion = 1;

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
      h_ ^= c;
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(double x) noexcept {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) {
      h_ ^= bits & 0xffu;
      h_ *= 0x100000001b3ULL;
      bits >>= 8;
    }
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string trajectory_checksum(const Grid<double>& traj) {
  Fnv1a h;
  for (double x : traj.data()) h.update(x);
  return hex64(h.value());
}

inline std::string digest(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return hex64(h.value());
}

// ---------------------------------------------------------------------------

inline json params_to_json(const ModelParams& p) {
  return json{{"epsilon", p.epsilon},         {"mu", p.mu},
              {"rho", p.rho},                 {"n_agents", p.n_agents},
              {"n_steps", p.n_steps},         {"edges_per_step", p.edges_per_step},
              {"proxies_per_step", p.proxies_per_step}};
}

inline ModelParams params_from_json(const json& j) {
  ModelParams p;
  p.epsilon = j.at("epsilon").get<double>();
  p.mu = j.at("mu").get<double>();
  p.rho = j.at("rho").get<double>();
  p.n_agents = j.at("n_agents").get<std::size_t>();
  p.n_steps = j.at("n_steps").get<std::size_t>();
  p.edges_per_step = j.at("edges_per_step").get<std::size_t>();
  p.proxies_per_step = j.at("proxies_per_step").get<std::size_t>();
  return p;
}

namespace detail {

inline json pairs_to_json(const Grid<InteractionPair>& g) {
  json rows = json::array();
  for (std::size_t t = 0; t < g.rows(); ++t) {
    json row = json::array();
    for (const auto& p : g.row(t)) row.push_back({p.u, p.v});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json signs_to_json(const Grid<std::uint8_t>& g) {
  json rows = json::array();
  for (std::size_t t = 0; t < g.rows(); ++t) {
    json row = json::array();
    for (auto s : g.row(t)) row.push_back(static_cast<int>(s));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json proxies_to_json(const Grid<Proxy>& g) {
  json rows = json::array();
  for (std::size_t t = 0; t < g.rows(); ++t) {
    json row = json::array();
    for (const auto& p : g.row(t)) row.push_back({p.agent, static_cast<int>(p.label)});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline InteractionPair pair_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("trace file: pair must be [u, v]");
  return {j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>()};
}

/// Reads a T x width table; width is checked against every row.
template <typename T, typename F>
Grid<T> grid_from_json(const json& j, std::size_t rows, std::size_t width, F&& convert, const char* what) {
  if (!j.is_array() || j.size() != rows) throw std::runtime_error(std::string("trace file: ") + what + " has wrong row count");
  Grid<T> g(rows, width);
  for (std::size_t t = 0; t < rows; ++t) {
    const auto& row = j[t];
    if (!row.is_array() || row.size() != width)
      throw std::runtime_error(std::string("trace file: ") + what + " has wrong row width");
    for (std::size_t c = 0; c < width; ++c) g(t, c) = convert(row[c]);
  }
  return g;
}

inline std::uint8_t bit_from_json(const json& j) {
  const int b = j.get<int>();
  if (b != 0 && b != 1) throw std::runtime_error("trace file: bit must be 0 or 1");
  return static_cast<std::uint8_t>(b);
}

}  // namespace detail

inline json observed_to_json(const ObservedData& obs) {
  json j;
  j["scenario"] = std::string(to_string(kind_of(obs)));
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        j["n_agents"] = o.n_agents;
        j["signs"] = detail::signs_to_json(o.signs);
        if constexpr (std::is_same_v<T, FullObservation>) {
          j["x0"] = o.x0;
          j["schedule"] = detail::pairs_to_json(o.schedule);
        } else if constexpr (std::is_same_v<T, PartialObservation>) {
          j["x0"] = o.x0;
          json rows = json::array();
          for (std::size_t t = 0; t < o.schedule.rows(); ++t) {
            json row = json::array();
            for (const auto& p : o.schedule.row(t)) row.push_back(p ? json{p->u, p->v} : json(nullptr));
            rows.push_back(std::move(row));
          }
          j["masked_schedule"] = std::move(rows);
        } else {
          j["schedule"] = detail::pairs_to_json(o.schedule);
          j["proxies"] = detail::proxies_to_json(o.proxies);
        }
      },
      obs);
  return j;
}

inline json trace_to_json(const Trace& tr, ScenarioKind scenario) {
  json j;
  j["format"] = std::string(kTraceFormat);
  j["version"] = kTraceVersion;
  j["params"] = params_to_json(tr.params);
  j["seed"] = tr.seed;
  j["scenario"] = std::string(to_string(scenario));
  j["x0"] = tr.x0;
  j["schedule"] = detail::pairs_to_json(tr.schedule);
  j["signs"] = detail::signs_to_json(tr.signs);
  j["proxies"] = detail::proxies_to_json(tr.proxies);
  j["trajectory_checksum"] = trajectory_checksum(tr.trajectory);
  j["observed"] = observed_to_json(observe(tr, scenario));
  return j;
}

struct TraceFile {
  Trace trace;
  ScenarioKind scenario = ScenarioKind::full;
};

inline TraceFile trace_from_json(const json& j) {
  if (j.value("format", std::string{}) != kTraceFormat) throw std::runtime_error("not a bcm trace file");
  if (j.at("version").get<int>() != kTraceVersion)
    throw std::runtime_error("unsupported trace file version " + j.at("version").dump());
  TraceFile f;
  Trace& tr = f.trace;
  tr.params = params_from_json(j.at("params"));
  tr.params.validate();
  tr.seed = j.at("seed").get<std::uint64_t>();
  f.scenario = parse_scenario(j.at("scenario").get<std::string>());
  tr.x0 = j.at("x0").get<Opinions>();
  const auto& p = tr.params;
  if (tr.x0.size() != p.n_agents) throw std::runtime_error("trace file: x0 length differs from n_agents");
  tr.schedule = detail::grid_from_json<InteractionPair>(j.at("schedule"), p.n_steps, p.edges_per_step,
                                                        detail::pair_from_json, "schedule");
  tr.signs = detail::grid_from_json<std::uint8_t>(j.at("signs"), p.n_steps, p.edges_per_step, detail::bit_from_json,
                                                  "signs");
  tr.proxies = detail::grid_from_json<Proxy>(
      j.at("proxies"), p.n_steps, p.proxies_per_step,
      [](const json& e) {
        if (!e.is_array() || e.size() != 2) throw std::runtime_error("trace file: proxy must be [agent, label]");
        return Proxy{e[0].get<std::uint32_t>(), detail::bit_from_json(e[1])};
      },
      "proxies");
  for (const auto& pr : tr.schedule.data())
    if (pr.u >= p.n_agents || pr.v >= p.n_agents) throw std::runtime_error("trace file: agent index out of range");
  for (const auto& px : tr.proxies.data())
    if (px.agent >= p.n_agents) throw std::runtime_error("trace file: proxy agent out of range");
  tr.trajectory = replay_trajectory(tr.x0, tr.schedule, tr.signs, p.mu);
  if (trajectory_checksum(tr.trajectory) != j.at("trajectory_checksum").get<std::string>())
    throw std::runtime_error("trace file: trajectory checksum mismatch (implementation drift or corrupted file)");
  return f;
}

inline std::string serialize_trace(const Trace& tr, ScenarioKind scenario) {
  return trace_to_json(tr, scenario).dump(1) + "\n";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

/// Writes the trace and returns the digest of the bytes written.
inline std::string save_trace(const std::string& path, const Trace& tr, ScenarioKind scenario) {
  const std::string text = serialize_trace(tr, scenario);
  write_file(path, text);
  return digest(text);
}

inline TraceFile load_trace(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("trace file '" + path + "' is not valid JSON: " + e.what());
  }
  return trace_from_json(j);
}

}  // namespace bcm
