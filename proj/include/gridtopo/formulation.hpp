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

// Mixed-integer reformulation of the topology design problem: one binary z
// per free candidate line, the reduced-Laplacian inverse X as continuous
// variables, and McCormick-linearized products y = z X.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gridtopo/dynamics.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/lp.hpp"
#include "gridtopo/netgraph.hpp"

namespace gridtopo {

// augment: lines marked existing are kept, the budget counts all lines.
// radial: choose a spanning tree (budget equals the number of non-reference
// buses). mesh: any connected topology within the budget, from scratch.
enum class DesignMode { augment, radial, mesh };

inline DesignMode parse_design_mode(const std::string& name) {
  if (name == "augment") return DesignMode::augment;
  if (name == "radial") return DesignMode::radial;
  if (name == "mesh") return DesignMode::mesh;
  throw GridError(ErrorKind::invalid_input, "unknown mode '" + name + "'");
}

inline const char* to_string(DesignMode mode) {
  switch (mode) {
    case DesignMode::augment: return "augment";
    case DesignMode::radial: return "radial";
    case DesignMode::mesh: return "mesh";
  }
  return "?";
}

struct DesignProblem {
  int n_buses = 0;
  int reference = 0;
  std::vector<Line> candidates;  // the full line set; existing ones included
  int budget = 0;                // total number of selected lines
  DesignMode mode = DesignMode::augment;
  CoherenceSpec spec;

  int n_reduced() const { return n_buses - 1; }

  std::vector<int> existing() const {
    std::vector<int> out;
    for (std::size_t m = 0; m < candidates.size(); ++m) {
      if (candidates[m].status == LineStatus::existing) {
        out.push_back(static_cast<int>(m));
      }
    }
    return out;
  }

  std::vector<Line> existing_lines() const {
    std::vector<Line> out;
    for (int m : existing()) out.push_back(candidates[m]);
    return out;
  }

  void validate() const {
    if (n_buses < 1) throw GridError(ErrorKind::invalid_input, "no buses");
    if (reference < 0 || reference >= n_buses) {
      throw GridError(ErrorKind::invalid_input, "reference bus out of range");
    }
    validate_lines(candidates, n_buses);
    if (spec.n_buses() != n_buses) {
      throw GridError(ErrorKind::invalid_input, "metric size mismatch");
    }
    spec.validate();
    if (mode == DesignMode::augment && !is_connected(existing_lines(), n_buses)) {
      throw GridError(ErrorKind::disconnected,
                      "existing lines are not connected; use radial or mesh "
                      "design instead");
    }
    if (budget < n_reduced()) {
      throw GridError(ErrorKind::assumption,
                      "budget must be at least the number of buses minus one");
    }
    if (mode == DesignMode::radial && budget != n_reduced()) {
      throw GridError(ErrorKind::assumption,
                      "radial design needs budget equal to buses minus one");
    }
    if (mode == DesignMode::augment && static_cast<int>(existing().size()) > budget) {
      throw GridError(ErrorKind::infeasible,
                      "budget is smaller than the number of existing lines");
    }
    if (!is_connected(candidates, n_buses)) {
      throw GridError(ErrorKind::infeasible,
                      "no connected topology within budget: candidate lines "
                      "do not connect all buses");
    }
  }
};

inline std::vector<int> line_degrees(std::span<const Line> lines, int n_buses) {
  std::vector<int> degree(n_buses, 0);
  for (const Line& l : lines) {
    ++degree[l.from];
    ++degree[l.to];
  }
  return degree;
}

// Reference bus used inside the model. Radial bounds need a reference that
// touches exactly one candidate line; if the declared one does not, the
// lowest-index bus that does is used instead. The objective does not depend
// on this choice because W has zero row sums.
inline int model_reference(const DesignProblem& p) {
  if (p.mode != DesignMode::radial || p.n_buses == 1) return p.reference;
  const auto degree = line_degrees(p.candidates, p.n_buses);
  if (degree[p.reference] == 1) return p.reference;
  for (int v = 0; v < p.n_buses; ++v) {
    if (degree[v] == 1) return v;
  }
  throw GridError(ErrorKind::assumption,
                  "radial bounds need a reference bus incident to exactly one "
                  "candidate line, and no such bus exists");
}

// Box bounds on X over reduced indices; symmetric matrices.
struct VariableBounds {
  Eigen::MatrixXd lower;
  Eigen::MatrixXd upper;

  int size() const { return static_cast<int>(lower.rows()); }

  bool contains(const Eigen::MatrixXd& x, double tol = 1e-9) const {
    for (int i = 0; i < size(); ++i) {
      for (int j = 0; j < size(); ++j) {
        const double scale = std::max(1.0, std::abs(x(i, j)));
        if (x(i, j) < lower(i, j) - tol * scale) return false;
        if (x(i, j) > upper(i, j) + tol * scale) return false;
      }
    }
    return true;
  }

  // Rounding can leave a pinned entry with lower a hair above upper.
  static constexpr double kCrossTol = 1e-12;

  void require_consistent() const {
    for (int i = 0; i < size(); ++i) {
      for (int j = 0; j < size(); ++j) {
        const double slack = kCrossTol * std::max(1.0, std::abs(upper(i, j)));
        if (!(lower(i, j) <= upper(i, j) + slack) || lower(i, j) < 0.0) {
          char buf[128];
          std::snprintf(buf, sizeof buf,
                        "infeasible bounds on X(%d,%d): [%g, %g]", i, j,
                        lower(i, j), upper(i, j));
          throw GridError(ErrorKind::infeasible, buf);
        }
      }
    }
  }

  void snap_crossings() {
    lower = lower.cwiseMin(upper);
  }
};

inline VariableBounds bounds_loose(int n_reduced, double upper = 10.0) {
  return {Eigen::MatrixXd::Zero(n_reduced, n_reduced),
          Eigen::MatrixXd::Constant(n_reduced, n_reduced, upper)};
}

// Adding lines only shrinks the inverse, so the existing network's inverse
// caps every design that keeps it.
inline VariableBounds bounds_augment(const DesignProblem& p) {
  const int ref = model_reference(p);
  const auto existing = p.existing_lines();
  if (!is_connected(existing, p.n_buses)) {
    throw GridError(ErrorKind::disconnected,
                    "existing lines are not connected; use radial bounds");
  }
  const Eigen::MatrixXd inv =
      build_laplacian(existing, p.n_buses, ref).reduced.inverse();
  const int n = p.n_reduced();
  VariableBounds b{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd(n, n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      b.upper(i, j) = i == j ? inv(i, i) : 0.5 * (inv(i, i) + inv(j, j));
    }
  }
  return b;
}

struct RadialConstants {
  double f = 0.0;      // heaviest spanning tree, in inverse susceptance
  double x0 = 0.0;     // the reference line
  double x_min = 0.0;  // lightest candidate line
  std::vector<double> h;  // shortest path from the reference, per bus
};

inline RadialConstants radial_constants(const DesignProblem& p) {
  const int ref = model_reference(p);
  const WeightedGraph g = inverse_weight_graph(p.candidates, p.n_buses);
  RadialConstants c;
  c.f = max_spanning_tree_weight(g);
  c.h = shortest_path_weights(g, ref);
  c.x_min = std::numeric_limits<double>::infinity();
  for (const WeightedEdge& e : g.edges) {
    c.x_min = std::min(c.x_min, e.weight);
    if (e.u == ref || e.v == ref) c.x0 = e.weight;
  }
  return c;
}

inline VariableBounds bounds_radial(const DesignProblem& p) {
  const int ref = model_reference(p);
  const RadialConstants c = radial_constants(p);
  const int n = p.n_reduced();
  VariableBounds b{Eigen::MatrixXd(n, n), Eigen::MatrixXd(n, n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) {
        b.lower(i, i) = c.h[bus_of_reduced(i, ref)];
        b.upper(i, i) = c.f;
      } else {
        b.lower(i, j) = c.x0;
        b.upper(i, j) = c.f - c.x_min;
      }
    }
  }
  return b;
}

// Any connected selection: X is entrywise nonnegative, and each diagonal
// entry is an effective resistance no larger than a spanning tree's weight.
inline VariableBounds bounds_mesh(const DesignProblem& p) {
  const double f =
      max_spanning_tree_weight(inverse_weight_graph(p.candidates, p.n_buses));
  return bounds_loose(p.n_reduced(), f);
}

inline VariableBounds bounds_auto(const DesignProblem& p) {
  switch (p.mode) {
    case DesignMode::augment: return bounds_augment(p);
    case DesignMode::radial: return bounds_radial(p);
    case DesignMode::mesh: return bounds_mesh(p);
  }
  return bounds_loose(p.n_reduced());
}

struct Tightening {
  VariableBounds bounds;
  std::vector<int> fixed_on;                    // candidate indices
  std::vector<std::pair<int, int>> pair_rows;   // z_a + z_b >= 1
};

// Lines whose removal disconnects the candidate graph must be selected, and
// every two-line cutset needs one of its lines. For trees, each bus beyond a
// forced line sees that line's far endpoint on its reference path, so
// X_kj >= h_j there.
inline Tightening tighten_bounds(const DesignProblem& p,
                                 const VariableBounds& bounds,
                                 const CutsetReport& cuts) {
  const int ref = model_reference(p);
  Tightening t{bounds, {}, {}};
  for (const CriticalEdge& c : cuts.critical) t.fixed_on.push_back(c.edge);
  t.pair_rows = cuts.pair_cutsets;
  if (p.mode != DesignMode::radial) return t;

  const RadialConstants rc = radial_constants(p);
  for (const CriticalEdge& c : cuts.critical) {
    if (std::find(c.reference_side.begin(), c.reference_side.end(), ref) ==
        c.reference_side.end()) {
      continue;  // reported with a different source; never expected
    }
    const Line& line = p.candidates[c.edge];
    const bool from_on_ref_side =
        std::find(c.reference_side.begin(), c.reference_side.end(),
                  line.from) != c.reference_side.end();
    const int j = from_on_ref_side ? line.to : line.from;
    const int rj = reduced_index(j, ref);
    for (int k : c.far_side) {
      const int rk = reduced_index(k, ref);
      const double raised = std::max(t.bounds.lower(rk, rj), rc.h[j]);
      t.bounds.lower(rk, rj) = raised;
      t.bounds.lower(rj, rk) = std::max(t.bounds.lower(rj, rk), raised);
    }
  }
  return t;
}

inline Tightening tighten_bounds(const DesignProblem& p,
                                 const VariableBounds& bounds) {
  return tighten_bounds(
      p, bounds,
      enumerate_critical_edges(inverse_weight_graph(p.candidates, p.n_buses),
                               model_reference(p)));
}

// Per-node fixing of the free binaries.
enum class Fix : std::int8_t { free = -1, off = 0, on = 1 };

class MilpModel {
 public:
  struct FreeEdge {
    int line = 0;      // candidate index
    int end_a = -1;    // reduced endpoints; -1 for the reference
    int end_b = -1;
    double susceptance = 0.0;
    std::map<std::pair<int, int>, int> y;  // (endpoint k, c) -> y slot
  };

  // Relaxation with some binaries fixed; variables are z (unfixed edges in
  // free-edge order), X (upper triangle, row-major), then y of unfixed edges.
  struct NodeLp {
    LpProblem lp;
    std::vector<int> z_var;  // per free edge: LP column or -1 when fixed
    std::vector<std::string> names;
  };

  int n_buses = 0;
  int reference = 0;
  std::vector<Line> lines;
  std::vector<int> fixed_edges;   // always selected
  std::vector<FreeEdge> free_edges;
  std::vector<std::pair<int, int>> pair_rows;  // positions in free_edges
  int free_budget = 0;            // cap on selected free edges
  VariableBounds bounds;
  Eigen::MatrixXd w_reduced;      // objective weights
  Eigen::MatrixXd base_laplacian; // reduced Laplacian of fixed_edges
  int y_slots = 0;

  int n_reduced() const { return n_buses - 1; }
  int n_free() const { return static_cast<int>(free_edges.size()); }
  int n_x() const { return n_reduced() * (n_reduced() + 1) / 2; }

  int x_offset(int i, int j) const {
    if (i > j) std::swap(i, j);
    const int n = n_reduced();
    return i * n - i * (i - 1) / 2 + (j - i);
  }

  // Full relaxation: every binary unfixed.
  NodeLp root() const {
    return *relaxation(std::vector<Fix>(free_edges.size(), Fix::free));
  }

  // nullopt when the fixings alone already make the node infeasible. A
  // connected selection consistent with `fix`, when given, seeds the simplex
  // with its exact point.
  std::optional<NodeLp> relaxation(const std::vector<Fix>& fix,
                                   bool with_names = false,
                                   const std::vector<bool>* seed = nullptr) const {
    const int n = n_reduced();
    int on = 0;
    std::vector<int> unfixed;
    for (int p = 0; p < n_free(); ++p) {
      if (fix[p] == Fix::on) ++on;
      if (fix[p] == Fix::free) unfixed.push_back(p);
    }
    const int budget_left = free_budget - on;
    if (budget_left < 0) return std::nullopt;

    NodeLp node;
    LpProblem& lp = node.lp;
    node.z_var.assign(free_edges.size(), -1);
    auto add_var = [&](double lo, double hi, double c, std::string name) {
      lp.lower.push_back(lo);
      lp.upper.push_back(hi);
      lp.cost.push_back(c);
      if (with_names) node.names.push_back(std::move(name));
      return static_cast<int>(lp.cost.size()) - 1;
    };
    for (int p : unfixed) {
      double lo = 0.0;
      for (auto [a, b] : pair_rows) {
        const int other = a == p ? b : (b == p ? a : -1);
        if (other >= 0 && fix[other] == Fix::off) lo = 1.0;
      }
      node.z_var[p] = add_var(lo, 1.0, 0.0,
                              with_names ? z_name(p) : std::string());
    }
    for (auto [a, b] : pair_rows) {
      if (fix[a] == Fix::off && fix[b] == Fix::off) return std::nullopt;
    }
    const int x_base = static_cast<int>(lp.cost.size());
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double w = i == j ? w_reduced(i, i)
                                : w_reduced(i, j) + w_reduced(j, i);
        add_var(bounds.lower(i, j), bounds.upper(i, j), w,
                with_names ? x_name(i, j) : std::string());
      }
    }
    auto xv = [&](int i, int j) { return x_base + x_offset(i, j); };

    // y columns of unfixed edges.
    std::vector<std::vector<int>> y_var(free_edges.size());
    for (int p : unfixed) {
      const FreeEdge& e = free_edges[p];
      y_var[p].assign(e.y.size(), -1);
      for (const auto& [key, slot] : e.y) {
        const auto [k, c] = key;
        y_var[p][slot] = add_var(0.0, bounds.upper(k, c), 0.0,
                                 with_names ? y_name(p, k, c) : std::string());
      }
    }

    // L(z) X = I with fixed edges folded into the constant part.
    Eigen::MatrixXd base = base_laplacian;
    for (int p = 0; p < n_free(); ++p) {
      if (fix[p] != Fix::on) continue;
      add_outer(base, free_edges[p]);
    }
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        LinearRow row;
        row.sense = RowSense::equal;
        row.rhs = r == c ? 1.0 : 0.0;
        for (int k = 0; k < n; ++k) {
          if (base(r, k) != 0.0) {
            row.index.push_back(xv(k, c));
            row.coef.push_back(base(r, k));
          }
        }
        for (int p : unfixed) {
          const FreeEdge& e = free_edges[p];
          double sign = 0.0;
          if (e.end_a == r) sign = 1.0;
          if (e.end_b == r) sign = -1.0;
          if (sign == 0.0) continue;
          const double coef = sign * e.susceptance;
          if (e.end_a >= 0) {
            row.index.push_back(y_var[p][slot_of(e, e.end_a, c)]);
            row.coef.push_back(coef);
          }
          if (e.end_b >= 0) {
            row.index.push_back(y_var[p][slot_of(e, e.end_b, c)]);
            row.coef.push_back(-coef);
          }
        }
        merge_duplicates(row);
        if (with_names) {
          row.name = "L_" + std::to_string(bus_of_reduced(r, reference)) + "_" +
                     std::to_string(bus_of_reduced(c, reference));
        }
        lp.rows.push_back(std::move(row));
      }
    }

    // y = z X envelopes.
    for (int p : unfixed) {
      const FreeEdge& e = free_edges[p];
      const int z = node.z_var[p];
      for (const auto& [key, slot] : e.y) {
        const auto [k, c] = key;
        const int y = y_var[p][slot];
        const int x = xv(k, c);
        const double lo = bounds.lower(k, c), hi = bounds.upper(k, c);
        const std::string tag =
            with_names ? "_" + std::to_string(e.line) + "_" +
                             std::to_string(bus_of_reduced(std::min(k, c), reference)) +
                             "_" +
                             std::to_string(bus_of_reduced(std::max(k, c), reference))
                       : std::string();
        lp.rows.push_back({{y, z}, {1.0, -lo}, RowSense::greater_equal, 0.0,
                           with_names ? "mca" + tag : ""});
        lp.rows.push_back({{y, x, z}, {1.0, -1.0, -hi}, RowSense::greater_equal,
                           -hi, with_names ? "mcb" + tag : ""});
        lp.rows.push_back({{y, z}, {1.0, -hi}, RowSense::less_equal, 0.0,
                           with_names ? "mcc" + tag : ""});
        lp.rows.push_back({{y, x, z}, {1.0, -1.0, -lo}, RowSense::less_equal,
                           -lo, with_names ? "mcd" + tag : ""});
      }
    }

    if (static_cast<int>(unfixed.size()) > budget_left) {
      LinearRow row;
      row.sense = RowSense::less_equal;
      row.rhs = budget_left;
      for (int p : unfixed) {
        row.index.push_back(node.z_var[p]);
        row.coef.push_back(1.0);
      }
      if (with_names) row.name = "budget";
      lp.rows.push_back(std::move(row));
    }
    for (auto [a, b] : pair_rows) {
      if (fix[a] != Fix::free || fix[b] != Fix::free) continue;
      lp.rows.push_back({{node.z_var[a], node.z_var[b]}, {1.0, 1.0},
                         RowSense::greater_equal, 1.0,
                         with_names ? "cut_" + std::to_string(free_edges[a].line) +
                                          "_" + std::to_string(free_edges[b].line)
                                    : ""});
    }
    if (seed != nullptr) {
      const Eigen::MatrixXd x = laplacian_of(*seed).inverse();
      lp.start.assign(lp.cost.size(), 0.0);
      for (int p : unfixed) {
        const bool on = (*seed)[free_edges[p].line];
        lp.start[node.z_var[p]] = on ? 1.0 : 0.0;
        for (const auto& [key, slot] : free_edges[p].y) {
          lp.start[y_var[p][slot]] = on ? x(key.first, key.second) : 0.0;
        }
      }
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) lp.start[xv(i, j)] = x(i, j);
      }
    }
    return node;
  }

  // Reduced Laplacian for a selection given over candidate indices.
  Eigen::MatrixXd laplacian_of(const std::vector<bool>& selected) const {
    return assemble_reduced_laplacian(lines, selected, n_buses, reference);
  }

  // Root-relaxation point (z, X, y = z X) for a full selection; X is taken as
  // the inverse of the selection's reduced Laplacian.
  std::vector<double> point_for(const std::vector<bool>& selected) const {
    const Eigen::MatrixXd x = laplacian_of(selected).inverse();
    std::vector<double> out;
    for (const FreeEdge& e : free_edges) out.push_back(selected[e.line] ? 1.0 : 0.0);
    const int n = n_reduced();
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) out.push_back(x(i, j));
    }
    for (const FreeEdge& e : free_edges) {
      std::vector<double> ys(e.y.size());
      for (const auto& [key, slot] : e.y) {
        ys[slot] = selected[e.line] ? x(key.first, key.second) : 0.0;
      }
      out.insert(out.end(), ys.begin(), ys.end());
    }
    return out;
  }

  std::string z_name(int p) const {
    return "z_" + std::to_string(free_edges[p].line);
  }
  std::string x_name(int i, int j) const {
    return "X_" + std::to_string(bus_of_reduced(i, reference)) + "_" +
           std::to_string(bus_of_reduced(j, reference));
  }
  std::string y_name(int p, int k, int c) const {
    const int a = bus_of_reduced(std::min(k, c), reference);
    const int b = bus_of_reduced(std::max(k, c), reference);
    return "y_" + std::to_string(free_edges[p].line) + "_" + std::to_string(a) +
           "_" + std::to_string(b);
  }

  void add_outer(Eigen::MatrixXd& m, const FreeEdge& e) const {
    if (e.end_a >= 0) m(e.end_a, e.end_a) += e.susceptance;
    if (e.end_b >= 0) m(e.end_b, e.end_b) += e.susceptance;
    if (e.end_a >= 0 && e.end_b >= 0) {
      m(e.end_a, e.end_b) -= e.susceptance;
      m(e.end_b, e.end_a) -= e.susceptance;
    }
  }

  static int slot_of(const FreeEdge& e, int k, int c) {
    return e.y.at({std::min(k, c), std::max(k, c)});
  }

 private:
  static void merge_duplicates(LinearRow& row) {
    std::map<int, double> acc;
    for (std::size_t t = 0; t < row.index.size(); ++t) {
      acc[row.index[t]] += row.coef[t];
    }
    row.index.clear();
    row.coef.clear();
    for (auto [i, v] : acc) {
      if (v != 0.0) {
        row.index.push_back(i);
        row.coef.push_back(v);
      }
    }
  }
};

// Lines that every design must contain: the existing network when
// augmenting, plus the forced lines of a tightening.
inline MilpModel build_milp(const DesignProblem& p, const VariableBounds& bounds,
                            const std::vector<int>& fixed_on = {},
                            const std::vector<std::pair<int, int>>& pair_rows = {}) {
  bounds.require_consistent();
  const int ref = model_reference(p);
  const int n = p.n_reduced();
  if (bounds.size() != n) {
    throw GridError(ErrorKind::invalid_input, "bounds size mismatch");
  }
  MilpModel m;
  m.n_buses = p.n_buses;
  m.reference = ref;
  m.lines = p.candidates;
  m.bounds = bounds;
  m.bounds.snap_crossings();
  m.w_reduced = p.spec.reduced_W(ref);

  std::vector<bool> fixed(p.candidates.size(), false);
  if (p.mode == DesignMode::augment) {
    for (int e : p.existing()) fixed[e] = true;
  }
  for (int e : fixed_on) fixed[e] = true;
  std::vector<int> position(p.candidates.size(), -1);
  for (std::size_t e = 0; e < p.candidates.size(); ++e) {
    if (fixed[e]) {
      m.fixed_edges.push_back(static_cast<int>(e));
      continue;
    }
    const Line& line = p.candidates[e];
    MilpModel::FreeEdge fe;
    fe.line = static_cast<int>(e);
    fe.end_a = line.from == ref ? -1 : reduced_index(line.from, ref);
    fe.end_b = line.to == ref ? -1 : reduced_index(line.to, ref);
    fe.susceptance = line.susceptance;
    for (int k : {fe.end_a, fe.end_b}) {
      if (k < 0) continue;
      for (int c = 0; c < n; ++c) {
        const std::pair<int, int> key{std::min(k, c), std::max(k, c)};
        if (!fe.y.count(key)) {
          const int slot = static_cast<int>(fe.y.size());
          fe.y.emplace(key, slot);
        }
      }
    }
    m.y_slots += static_cast<int>(fe.y.size());
    position[e] = m.n_free();
    m.free_edges.push_back(std::move(fe));
  }
  // Slots follow map order so the layout is independent of insertion order.
  for (auto& fe : m.free_edges) {
    int slot = 0;
    for (auto& kv : fe.y) kv.second = slot++;
  }
  for (auto [a, b] : pair_rows) {
    if (fixed[a] || fixed[b]) continue;
    m.pair_rows.push_back({position[a], position[b]});
  }
  m.free_budget = p.budget - static_cast<int>(m.fixed_edges.size());
  if (m.free_budget < 0) {
    throw GridError(ErrorKind::infeasible,
                    "no connected topology within budget: forced lines exceed "
                    "the budget");
  }
  std::vector<bool> sel(p.candidates.size(), false);
  for (int e : m.fixed_edges) sel[e] = true;
  m.base_laplacian = assemble_reduced_laplacian(p.candidates, sel, p.n_buses, ref);
  return m;
}

// CPLEX LP text format.
inline void write_lp_format(std::ostream& os, const MilpModel& model) {
  const auto node = *model.relaxation(
      std::vector<Fix>(model.free_edges.size(), Fix::free), true);
  const LpProblem& lp = node.lp;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto term = [&](double c, const std::string& name, bool first) {
    std::string s = c < 0 ? (first ? "- " : " - ") : (first ? "" : " + ");
    s += num(std::abs(c)) + " " + name;
    return s;
  };
  os << "\\ gridtopo topology design model\nMinimize\n obj:";
  bool first = true;
  for (std::size_t j = 0; j < lp.cost.size(); ++j) {
    if (lp.cost[j] == 0.0) continue;
    os << " " << term(lp.cost[j], node.names[j], first);
    first = false;
  }
  if (first) os << " 0 " << node.names.front();
  os << "\nSubject To\n";
  for (const LinearRow& row : lp.rows) {
    os << " " << row.name << ":";
    for (std::size_t t = 0; t < row.index.size(); ++t) {
      os << " " << term(row.coef[t], node.names[row.index[t]], t == 0);
    }
    if (row.index.empty()) os << " 0 " << node.names.front();
    const char* sense = row.sense == RowSense::equal
                            ? "="
                            : (row.sense == RowSense::less_equal ? "<=" : ">=");
    os << " " << sense << " " << num(row.rhs) << "\n";
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < lp.cost.size(); ++j) {
    os << " " << num(lp.lower[j]) << " <= " << node.names[j]
       << " <= " << num(lp.upper[j]) << "\n";
  }
  os << "Binaries\n";
  for (int p = 0; p < model.n_free(); ++p) os << " " << model.z_name(p) << "\n";
  os << "End\n";
}

}  // namespace gridtopo
