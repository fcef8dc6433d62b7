// Copyright 2026 The gridtopo Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Network files (JSON, schema 1) and design result files.
#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridtopo/dynamics.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/netgraph.hpp"
#include "gridtopo/solver.hpp"

namespace gridtopo {

// Unreadable files and malformed JSON, as opposed to well-formed files that
// describe an invalid network.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PowerNetwork {
  std::string name;
  std::vector<int> ids;  // external id of each bus, in file order
  MachineParams machines;
  int reference = 0;
  std::vector<Line> lines;
  std::optional<MetricPreset> preset;
  std::optional<CoherenceSpec> explicit_metric;

  int n_buses() const { return static_cast<int>(ids.size()); }

  int index_of(int id) const {
    for (int i = 0; i < n_buses(); ++i) {
      if (ids[i] == id) return i;
    }
    throw GridError(ErrorKind::invalid_input,
                    "unknown bus id " + std::to_string(id));
  }

  std::vector<Line> existing_lines() const {
    std::vector<Line> out;
    for (const Line& l : lines) {
      if (l.status == LineStatus::existing) out.push_back(l);
    }
    return out;
  }

  std::vector<bool> existing_selection() const {
    std::vector<bool> z(lines.size());
    for (std::size_t m = 0; m < lines.size(); ++m) {
      z[m] = lines[m].status == LineStatus::existing;
    }
    return z;
  }

  // The metric named on the command line wins over the file's. The losses
  // preset weighs the lines passed in.
  CoherenceSpec metric(std::optional<MetricPreset> override,
                       std::span<const Line> loss_lines) const {
    if (override) return preset_spec(*override, loss_lines, n_buses());
    if (explicit_metric) return *explicit_metric;
    return preset_spec(preset.value_or(MetricPreset::coherence), loss_lines,
                       n_buses());
  }

  std::string metric_name(std::optional<MetricPreset> override) const {
    if (override) return to_string(*override);
    if (explicit_metric) return "explicit";
    return to_string(preset.value_or(MetricPreset::coherence));
  }
};

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key,
                                   const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw GridError(ErrorKind::invalid_input,
                    where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

inline double number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) {
    throw GridError(ErrorKind::invalid_input, where + ": expected a number");
  }
  return j.get<double>();
}

inline int integer(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) {
    throw GridError(ErrorKind::invalid_input, where + ": expected an integer");
  }
  return j.get<int>();
}

}  // namespace detail

inline PowerNetwork parse_network(const nlohmann::json& doc) {
  using detail::field;
  using detail::integer;
  using detail::number;
  if (!doc.is_object()) {
    throw GridError(ErrorKind::invalid_input, "network file must be an object");
  }
  if (!doc.contains("schema") || doc.at("schema") != 1) {
    throw GridError(ErrorKind::invalid_input, "unsupported schema (expected 1)");
  }
  PowerNetwork net;
  net.name = doc.value("name", std::string("network"));

  std::optional<double> default_m, default_d;
  if (doc.contains("defaults")) {
    const auto& d = doc.at("defaults");
    if (d.contains("inertia")) default_m = number(d.at("inertia"), "defaults.inertia");
    if (d.contains("damping")) default_d = number(d.at("damping"), "defaults.damping");
  }

  const auto& buses = field(doc, "buses", "network");
  if (!buses.is_array() || buses.empty()) {
    throw GridError(ErrorKind::invalid_input, "network needs a non-empty bus list");
  }
  const int n = static_cast<int>(buses.size());
  net.machines.inertia.resize(n);
  net.machines.damping.resize(n);
  std::map<int, int> index;
  int references = 0;
  for (int i = 0; i < n; ++i) {
    const auto& b = buses[i];
    const std::string where = "bus #" + std::to_string(i);
    const int id = integer(field(b, "id", where), where + ".id");
    if (!index.emplace(id, i).second) {
      throw GridError(ErrorKind::invalid_input, "duplicate bus id " + std::to_string(id));
    }
    net.ids.push_back(id);
    if (b.contains("inertia")) {
      net.machines.inertia(i) = number(b.at("inertia"), where + ".inertia");
    } else if (default_m) {
      net.machines.inertia(i) = *default_m;
    } else {
      throw GridError(ErrorKind::invalid_input, where + ": no inertia and no default");
    }
    if (b.contains("damping")) {
      net.machines.damping(i) = number(b.at("damping"), where + ".damping");
    } else if (default_d) {
      net.machines.damping(i) = *default_d;
    } else {
      throw GridError(ErrorKind::invalid_input, where + ": no damping and no default");
    }
    if (b.value("is_reference", false)) {
      net.reference = i;
      ++references;
    }
  }
  if (references == 0) {
    throw GridError(ErrorKind::invalid_input, "no reference bus (set is_reference on one bus)");
  }
  if (references > 1) {
    throw GridError(ErrorKind::invalid_input, "more than one reference bus");
  }
  net.machines.validate();

  auto bus_index = [&](const nlohmann::json& j, const std::string& where) {
    const int id = integer(j, where);
    const auto it = index.find(id);
    if (it == index.end()) {
      throw GridError(ErrorKind::invalid_input, where + ": unknown bus " + std::to_string(id));
    }
    return it->second;
  };

  const auto& lines = field(doc, "lines", "network");
  if (!lines.is_array()) {
    throw GridError(ErrorKind::invalid_input, "lines must be an array");
  }
  for (std::size_t m = 0; m < lines.size(); ++m) {
    const auto& l = lines[m];
    const std::string where = "line #" + std::to_string(m);
    Line line;
    line.from = bus_index(field(l, "from", where), where + ".from");
    line.to = bus_index(field(l, "to", where), where + ".to");
    line.susceptance = number(field(l, "susceptance", where), where + ".susceptance");
    const std::string status = l.value("status", std::string("existing"));
    if (status == "existing") {
      line.status = LineStatus::existing;
    } else if (status == "candidate") {
      line.status = LineStatus::candidate;
    } else {
      throw GridError(ErrorKind::invalid_input, where + ": unknown status '" + status + "'");
    }
    net.lines.push_back(line);
  }
  validate_lines(net.lines, n);

  if (doc.contains("metric")) {
    const auto& metric = doc.at("metric");
    if (metric.is_string()) {
      net.preset = parse_metric_preset(metric.get<std::string>());
    } else if (metric.is_object() && metric.contains("preset")) {
      net.preset = parse_metric_preset(metric.at("preset").get<std::string>());
    } else if (metric.is_object()) {
      CoherenceSpec spec{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
      for (const auto& w : metric.value("w", nlohmann::json::array())) {
        const int a = bus_index(field(w, "from", "metric.w"), "metric.w.from");
        const int b = bus_index(field(w, "to", "metric.w"), "metric.w.to");
        const double v = number(field(w, "weight", "metric.w"), "metric.w.weight");
        if (a == b || v < 0.0) {
          throw GridError(ErrorKind::invalid_input,
                          "metric.w entries need distinct buses and weight >= 0");
        }
        spec.W(a, a) += v;
        spec.W(b, b) += v;
        spec.W(a, b) -= v;
        spec.W(b, a) -= v;
      }
      for (const auto& s : metric.value("s", nlohmann::json::array())) {
        const int a = bus_index(field(s, "bus", "metric.s"), "metric.s.bus");
        spec.s(a) = number(field(s, "weight", "metric.s"), "metric.s.weight");
      }
      spec.validate();
      net.explicit_metric = spec;
    } else {
      throw GridError(ErrorKind::invalid_input, "metric must be a preset name or an object");
    }
  }
  return net;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
}

inline PowerNetwork load_network(const std::string& path) {
  return parse_network(read_json_file(path));
}

inline nlohmann::json line_json(const PowerNetwork& net, int m) {
  const Line& l = net.lines[m];
  return {{"index", m},
          {"from", net.ids[l.from]},
          {"to", net.ids[l.to]},
          {"susceptance", l.susceptance},
          {"status", l.status == LineStatus::existing ? "existing" : "candidate"}};
}

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json stats_json(const SolverStats& s) {
  return {{"nodes_explored", s.nodes_explored},
          {"lp_solves", s.lp_solves},
          {"lp_iterations", s.lp_iterations},
          {"incumbent_updates", s.incumbent_updates},
          {"pruned_bound", s.pruned_bound},
          {"pruned_infeasible", s.pruned_infeasible},
          {"pruned_disconnected", s.pruned_disconnected},
          {"leaves_evaluated", s.leaves_evaluated},
          {"final_gap", s.final_gap},
          {"wall_seconds", s.wall_seconds},
          {"incumbent_history", s.incumbent_history}};
}

struct ResultEcho {
  std::string network_file;
  std::string metric;
  std::string bounds;   // "auto" or "loose"
  std::string solver;   // "bnb" or "brute"
  bool tighten = true;
};

inline nlohmann::json result_json(const PowerNetwork& net, const DesignProblem& p,
                                  const DesignRun& run, const ResultEcho& echo) {
  const DesignSolution& s = run.solution;
  nlohmann::json lines = nlohmann::json::array();
  for (int m : s.selected) lines.push_back(line_json(net, m));
  nlohmann::json fixed = nlohmann::json::array();
  for (int m : run.fixed_on) fixed.push_back(m);
  nlohmann::json pairs = nlohmann::json::array();
  for (auto [a, b] : run.pair_rows) pairs.push_back({a, b});
  nlohmann::json solution = {{"lines", lines},
                             {"selected", s.selected},
                             {"objective", s.objective},
                             {"certified", s.certified}};
  if (s.h2) {
    solution["h2_cost"] = s.h2->cost;
    solution["inertia_term"] = s.h2->inertia_term;
    solution["damping"] = s.h2->damping;
  }
  return {
      {"tool", "gridtopo"},
      {"version", GRIDTOPO_VERSION},
      {"problem",
       {{"network", net.name},
        {"network_file", echo.network_file},
        {"mode", to_string(p.mode)},
        {"budget_total", p.budget},
        {"metric", echo.metric},
        {"reference", net.ids[p.reference]},
        {"model_reference", net.ids[s.reference]},
        {"bounds", echo.bounds},
        {"tighten", echo.tighten},
        {"solver", echo.solver},
        {"candidate_count", p.candidates.size()}}},
      {"solution", solution},
      {"bounds",
       {{"lower", matrix_json(run.bounds.lower)},
        {"upper", matrix_json(run.bounds.upper)},
        {"fixed_lines", fixed},
        {"pair_cutsets", pairs}}},
      {"stats", stats_json(s.stats)}};
}

// Selection (per line of `net`) stored in a result file.
inline std::vector<bool> selection_from_result(const PowerNetwork& net,
                                               const nlohmann::json& result) {
  std::vector<bool> z(net.lines.size(), false);
  try {
    for (const auto& m : result.at("solution").at("selected")) {
      const int idx = m.get<int>();
      if (idx < 0 || idx >= static_cast<int>(net.lines.size())) {
        throw GridError(ErrorKind::invalid_input, "result refers to line " +
                                                      std::to_string(idx) +
                                                      " outside the network");
      }
      z[idx] = true;
    }
  } catch (const nlohmann::json::exception& e) {
    throw GridError(ErrorKind::invalid_input, std::string("bad result file: ") + e.what());
  }
  return z;
}

}  // namespace gridtopo
