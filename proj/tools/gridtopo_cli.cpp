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
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridtopo/dynamics.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/formulation.hpp"
#include "gridtopo/io.hpp"
#include "gridtopo/netgraph.hpp"
#include "gridtopo/solver.hpp"

namespace {

using namespace gridtopo;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::disconnected: return 2;
    case ErrorKind::invalid_input: return 3;
    case ErrorKind::assumption: return 3;
    case ErrorKind::infeasible: return 4;
    case ErrorKind::numeric: return 5;
  }
  return kExitUsage;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

std::optional<MetricPreset> metric_override(const std::string& name) {
  if (name.empty()) return std::nullopt;
  return parse_metric_preset(name);
}

std::vector<Line> chosen_lines(const PowerNetwork& net, const std::vector<bool>& z) {
  std::vector<Line> out;
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (z[m]) out.push_back(net.lines[m]);
  }
  return out;
}

std::vector<bool> selection_for(const PowerNetwork& net, const std::string& result_file) {
  if (result_file.empty()) return net.existing_selection();
  return selection_from_result(net, read_json_file(result_file));
}

void require_topology(const PowerNetwork& net, const std::vector<Line>& lines) {
  if (!is_connected(lines, net.n_buses())) {
    throw GridError(ErrorKind::disconnected,
                    "selected lines leave some bus unconnected");
  }
}

std::string line_label(const PowerNetwork& net, int m) {
  const Line& l = net.lines[m];
  return std::to_string(net.ids[l.from]) + "-" + std::to_string(net.ids[l.to]);
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string network;
  std::string metric;
  std::string lines_from;
  bool gramian = false;
};

int run_evaluate(const EvaluateArgs& a) {
  const PowerNetwork net = load_network(a.network);
  const std::vector<bool> z = selection_for(net, a.lines_from);
  const std::vector<Line> lines = chosen_lines(net, z);
  require_topology(net, lines);
  const CoherenceSpec spec = net.metric(metric_override(a.metric), lines);
  const LaplacianMatrix lap = build_laplacian(lines, net.n_buses(), net.reference);

  std::cout << "network: " << net.name << " (" << net.n_buses() << " buses, "
            << lines.size() << " lines)\n";
  std::cout << "metric: " << net.metric_name(metric_override(a.metric)) << "\n";
  const H2Breakdown h = h2_squared_closed_form(spec, lap, net.machines);
  std::cout << "topology term: " << fmt(h.topology_term) << "\n";
  std::cout << "inertia term: " << fmt(h.inertia_term) << "\n";
  std::cout << "H2 squared cost: " << fmt(h.cost) << "\n";
  if (a.gramian) {
    const StateSpace ss = assemble_state_space(lap, net.machines, spec);
    const double g = h2_squared_gramian(ss);
    std::cout << "gramian H2 squared cost: " << fmt(g) << "\n";
    std::cout << "relative difference: "
              << std::abs(g - h.cost) / std::max(std::abs(h.cost), 1e-300) << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------ design

struct DesignArgs {
  std::string network;
  std::string metric;
  std::string mode = "augment";
  std::optional<int> budget;
  std::string bounds = "auto";
  std::string tighten = "on";
  std::string solver = "bnb";
  std::string out;
  std::string export_model;
  bool log = false;
  long node_limit = 0;
};

DesignProblem design_problem(const PowerNetwork& net, const DesignArgs& a) {
  DesignProblem p;
  p.n_buses = net.n_buses();
  p.reference = net.reference;
  p.candidates = net.lines;
  p.mode = parse_design_mode(a.mode);
  p.spec = net.metric(metric_override(a.metric), net.lines);
  const int n = net.n_buses() - 1;
  switch (p.mode) {
    case DesignMode::augment: {
      // Extra lines on top of the existing grid.
      const int extra = a.budget.value_or(0);
      if (extra < 0) {
        throw GridError(ErrorKind::invalid_input, "--budget must be non-negative");
      }
      p.budget = static_cast<int>(net.existing_lines().size()) + extra;
      break;
    }
    case DesignMode::radial:
      p.budget = a.budget.value_or(n);
      break;
    case DesignMode::mesh:
      if (!a.budget) {
        throw GridError(ErrorKind::invalid_input, "mesh mode needs --budget");
      }
      p.budget = *a.budget;
      break;
  }
  return p;
}

int run_design(const DesignArgs& a) {
  const PowerNetwork net = load_network(a.network);
  const DesignProblem p = design_problem(net, a);

  DesignOptions opt;
  opt.bounds = a.bounds == "loose" ? BoundsChoice::loose : BoundsChoice::automatic;
  opt.tighten = a.tighten == "on";
  opt.brute_force = a.solver == "brute";
  opt.bnb.params = net.machines;
  opt.bnb.node_limit = a.node_limit;
  if (a.log) opt.bnb.log = &std::cerr;

  if (!a.export_model.empty()) {
    p.validate();
    VariableBounds bounds = opt.bounds == BoundsChoice::loose
                                ? bounds_loose(p.n_reduced())
                                : bounds_auto(p);
    std::vector<int> fixed_on;
    std::vector<std::pair<int, int>> pairs;
    if (opt.tighten) {
      Tightening t = tighten_bounds(p, bounds);
      bounds = std::move(t.bounds);
      fixed_on = std::move(t.fixed_on);
      pairs = std::move(t.pair_rows);
    }
    std::ofstream os(a.export_model);
    if (!os) throw IoError("cannot write " + a.export_model);
    write_lp_format(os, build_milp(p, bounds, fixed_on, pairs));
  }

  const DesignRun run = solve_design(p, opt);
  const DesignSolution& s = run.solution;
  std::cout << "mode: " << to_string(p.mode) << ", lines allowed: " << p.budget
            << ", candidates: " << p.candidates.size() << "\n";
  std::cout << "selected lines:";
  for (int m : s.selected) {
    if (p.mode != DesignMode::augment || net.lines[m].status != LineStatus::existing) {
      std::cout << ' ' << line_label(net, m);
    }
  }
  if (p.mode == DesignMode::augment) std::cout << " (plus existing)";
  std::cout << "\n";
  std::cout << "topology term: " << fmt(s.objective) << "\n";
  if (s.h2) std::cout << "H2 squared cost: " << fmt(s.h2->cost) << "\n";
  std::cout << "certified: " << (s.certified ? "yes" : "no")
            << ", nodes: " << s.stats.nodes_explored
            << ", LP solves: " << s.stats.lp_solves
            << ", seconds: " << s.stats.wall_seconds << "\n";

  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw IoError("cannot write " + a.out);
    const ResultEcho echo{a.network, net.metric_name(metric_override(a.metric)),
                          a.bounds, a.solver, opt.tighten};
    os << result_json(net, p, run, echo).dump(2) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string network;
  std::string metric;
  std::string lines_from;
  std::string out;
  int impulse_bus = 0;
  double horizon = 400.0;
  double dt = 0.01;
  int stride = 1;
};

Trajectory simulate(const PowerNetwork& net, const std::vector<bool>& z,
                    const std::string& metric, int impulse_bus,
                    SimulationOptions opt) {
  const std::vector<Line> lines = chosen_lines(net, z);
  require_topology(net, lines);
  const CoherenceSpec spec = net.metric(metric_override(metric), lines);
  const LaplacianMatrix lap = build_laplacian(lines, net.n_buses(), net.reference);
  const StateSpace ss = assemble_state_space(lap, net.machines, spec);
  return simulate_impulse(ss, net.index_of(impulse_bus), opt);
}

int run_simulate(const SimulateArgs& a) {
  const PowerNetwork net = load_network(a.network);
  const std::vector<bool> z = selection_for(net, a.lines_from);
  SimulationOptions opt;
  opt.horizon = a.horizon;
  opt.dt = a.dt;
  opt.record_stride = a.out.empty() ? 0 : a.stride;
  const Trajectory tr = simulate(net, z, a.metric, a.impulse_bus, opt);
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw IoError("cannot write " + a.out);
    write_trajectory_csv(os, tr);
  }
  std::cout << "output energy: " << fmt(tr.output_energy) << "\n";
  std::cout << "peak |omega|: " << fmt(tr.peak_abs_omega.maxCoeff()) << "\n";
  std::cout << "energy share in last 10% of horizon: " << tr.tail_fraction << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
  std::string network;
  std::string metric;
  std::vector<std::string> results;
  std::optional<int> impulse_bus;
  double horizon = 400.0;
  double dt = 0.01;
};

int run_compare(const CompareArgs& a) {
  const PowerNetwork net = load_network(a.network);
  struct Entry {
    std::string label;
    std::vector<bool> z;
  };
  std::vector<Entry> entries{{"existing", net.existing_selection()}};
  for (const std::string& r : a.results) entries.push_back({r, selection_for(net, r)});

  std::printf("%-32s %6s %16s %16s", "topology", "lines", "topology term", "H2 squared");
  if (a.impulse_bus) std::printf(" %16s %16s", "output energy", "peak |omega|");
  std::printf("\n");
  for (const Entry& e : entries) {
    const std::vector<Line> lines = chosen_lines(net, e.z);
    const int count = static_cast<int>(lines.size());
    if (!is_connected(lines, net.n_buses())) {
      std::printf("%-32s %6d %16s\n", e.label.c_str(), count, "disconnected");
      continue;
    }
    const CoherenceSpec spec = net.metric(metric_override(a.metric), lines);
    const H2Breakdown h = h2_squared_closed_form(
        spec, build_laplacian(lines, net.n_buses(), net.reference), net.machines);
    std::string response;
    if (a.impulse_bus) {
      SimulationOptions opt;
      opt.horizon = a.horizon;
      opt.dt = a.dt;
      opt.record_stride = 0;
      const Trajectory tr = simulate(net, e.z, a.metric, *a.impulse_bus, opt);
      char buf[64];
      std::snprintf(buf, sizeof buf, " %16.9f %16.9f", tr.output_energy,
                    tr.peak_abs_omega.maxCoeff());
      response = buf;
    }
    std::printf("%-32s %6d %16.9f %16.9f%s\n", e.label.c_str(), count, h.topology_term,
                h.cost, response.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-grid topology design by network coherence", "gridtopo"};
  app.set_version_flag("--version", std::string(GRIDTOPO_VERSION));
  app.require_subcommand(1);
  const std::vector<std::string> presets{"frequency", "losses", "coherence"};

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate the cost of a topology");
  evaluate->add_option("network", ev.network, "Network JSON file")->required();
  evaluate->add_option("--metric", ev.metric, "Metric preset overriding the file")
      ->check(CLI::IsMember(presets));
  evaluate->add_option("--lines-from", ev.lines_from,
                       "Evaluate the lines selected in a design result file");
  evaluate->add_flag("--gramian", ev.gramian, "Cross-check through the Lyapunov Gramian");

  DesignArgs de;
  auto* design = app.add_subcommand("design", "Choose lines minimizing the cost");
  design->add_option("network", de.network, "Network JSON file")->required();
  design->add_option("--metric", de.metric, "Metric preset overriding the file")
      ->check(CLI::IsMember(presets));
  design->add_option("--mode", de.mode, "augment, radial or mesh")
      ->check(CLI::IsMember({"augment", "radial", "mesh"}));
  design->add_option("--budget", de.budget,
                     "Augment: lines to add; radial/mesh: total lines");
  design->add_option("--bounds", de.bounds, "auto or loose")
      ->check(CLI::IsMember({"auto", "loose"}));
  design->add_option("--tighten", de.tighten, "on or off")
      ->check(CLI::IsMember({"on", "off"}));
  design->add_option("--solver", de.solver, "bnb or brute")
      ->check(CLI::IsMember({"bnb", "brute"}));
  design->add_option("--out", de.out, "Write the result JSON here");
  design->add_option("--export-model", de.export_model, "Write the root MILP in LP format");
  design->add_option("--node-limit", de.node_limit, "Stop after this many nodes (0: none)")
      ->check(CLI::NonNegativeNumber);
  design->add_flag("--log", de.log, "Progress log on stderr");

  SimulateArgs si;
  auto* sim = app.add_subcommand("simulate", "Impulse response of a topology");
  sim->add_option("network", si.network, "Network JSON file")->required();
  sim->add_option("--metric", si.metric, "Metric preset overriding the file")
      ->check(CLI::IsMember(presets));
  sim->add_option("--impulse-bus", si.impulse_bus, "Bus id receiving the impulse")
      ->required();
  sim->add_option("--horizon", si.horizon, "Simulated time in seconds")
      ->check(CLI::PositiveNumber);
  sim->add_option("--dt", si.dt, "Integration step in seconds")->check(CLI::PositiveNumber);
  sim->add_option("--stride", si.stride, "Keep every k-th step in the CSV")
      ->check(CLI::PositiveNumber);
  sim->add_option("--out", si.out, "Trajectory CSV file");
  sim->add_option("--lines-from", si.lines_from,
                  "Simulate the lines selected in a design result file");

  CompareArgs co;
  auto* compare = app.add_subcommand("compare", "Compare the existing grid with designs");
  compare->add_option("network", co.network, "Network JSON file")->required();
  compare->add_option("results", co.results, "Design result files");
  compare->add_option("--metric", co.metric, "Metric preset overriding the file")
      ->check(CLI::IsMember(presets));
  compare->add_option("--impulse-bus", co.impulse_bus, "Also simulate an impulse at this bus");
  compare->add_option("--horizon", co.horizon, "Simulated time in seconds")
      ->check(CLI::PositiveNumber);
  compare->add_option("--dt", co.dt, "Integration step in seconds")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*evaluate) return run_evaluate(ev);
    if (*design) return run_design(de);
    if (*sim) return run_simulate(si);
    if (*compare) return run_compare(co);
  } catch (const GridError& e) {
    std::cerr << "gridtopo: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const IoError& e) {
    std::cerr << "gridtopo: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
