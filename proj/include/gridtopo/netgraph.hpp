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

// Graph primitives for power networks: susceptance Laplacians, incidence
// vectors, spanning trees, shortest paths and cutset enumeration.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridtopo/error.hpp"

namespace gridtopo {

enum class LineStatus { existing, candidate };

struct Line {
  int from = 0;
  int to = 0;
  double susceptance = 1.0;  // per-unit, strictly positive
  LineStatus status = LineStatus::existing;
};

struct Bus {
  int id = 0;
  bool is_reference = false;
};

// Throws invalid_input for out-of-range ids, self loops, nonpositive
// susceptances and duplicate unordered pairs.
inline void validate_lines(std::span<const Line> lines, int n_buses) {
  std::set<std::pair<int, int>> seen;
  for (std::size_t m = 0; m < lines.size(); ++m) {
    const Line& line = lines[m];
    const std::string tag = "line " + std::to_string(m) + " (" +
                            std::to_string(line.from) + "-" +
                            std::to_string(line.to) + ")";
    if (line.from < 0 || line.to < 0 || line.from >= n_buses ||
        line.to >= n_buses) {
      throw GridError(ErrorKind::invalid_input, tag + ": bus id out of range");
    }
    if (line.from == line.to) {
      throw GridError(ErrorKind::invalid_input, tag + ": self loop");
    }
    if (!(line.susceptance > 0.0) || !std::isfinite(line.susceptance)) {
      throw GridError(ErrorKind::invalid_input,
                      tag + ": susceptance must be positive");
    }
    auto key = std::minmax(line.from, line.to);
    if (!seen.insert({key.first, key.second}).second) {
      throw GridError(ErrorKind::invalid_input, tag + ": duplicate line");
    }
  }
}

// Reduced matrices drop the reference row/column; these map bus ids to and
// from reduced positions.
inline int reduced_index(int bus, int reference) {
  return bus < reference ? bus : bus - 1;
}

inline int bus_of_reduced(int index, int reference) {
  return index < reference ? index : index + 1;
}

inline Eigen::MatrixXd remove_row_col(const Eigen::MatrixXd& m, int k) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd out(n - 1, n - 1);
  for (Eigen::Index i = 0, r = 0; i < n; ++i) {
    if (i == k) continue;
    for (Eigen::Index j = 0, c = 0; j < n; ++j) {
      if (j == k) continue;
      out(r, c++) = m(i, j);
    }
    ++r;
  }
  return out;
}

struct LaplacianMatrix {
  Eigen::MatrixXd full;     // (N+1) x (N+1)
  Eigen::MatrixXd reduced;  // N x N, reference row/column removed
  int reference = 0;

  int n_buses() const { return static_cast<int>(full.rows()); }
};

inline LaplacianMatrix build_laplacian(std::span<const Line> lines,
                                       int n_buses, int reference) {
  LaplacianMatrix out;
  out.reference = reference;
  out.full = Eigen::MatrixXd::Zero(n_buses, n_buses);
  for (const Line& line : lines) {
    const double b = line.susceptance;
    out.full(line.from, line.to) -= b;
    out.full(line.to, line.from) -= b;
    out.full(line.from, line.from) += b;
    out.full(line.to, line.to) += b;
  }
  out.reduced = n_buses > 0 ? remove_row_col(out.full, reference)
                            : Eigen::MatrixXd();
  return out;
}

// Signed incidence vector a_ij: +1 at `from`, -1 at `to`.
inline Eigen::VectorXd incidence_vector(const Line& line, int n_buses) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n_buses);
  a(line.from) = 1.0;
  a(line.to) = -1.0;
  return a;
}

inline Eigen::VectorXd reduced_incidence_vector(const Line& line, int n_buses,
                                                int reference) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n_buses - 1);
  if (line.from != reference) a(reduced_index(line.from, reference)) = 1.0;
  if (line.to != reference) a(reduced_index(line.to, reference)) = -1.0;
  return a;
}

// Sum of z_m b_m a_m a_m^T over the selected lines.
inline Eigen::MatrixXd assemble_reduced_laplacian(std::span<const Line> lines,
                                                  const std::vector<bool>& selected,
                                                  int n_buses, int reference) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_buses - 1, n_buses - 1);
  for (std::size_t m = 0; m < lines.size(); ++m) {
    if (!selected[m]) continue;
    const Eigen::VectorXd a =
        reduced_incidence_vector(lines[m], n_buses, reference);
    out.noalias() += lines[m].susceptance * a * a.transpose();
  }
  return out;
}

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), size_(n, 1), components_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --components_;
    return true;
  }

  int components() const { return components_; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  int components_;
};

inline bool is_connected(std::span<const Line> lines, int n_buses) {
  if (n_buses <= 1) return true;
  DisjointSets sets(n_buses);
  for (const Line& line : lines) sets.unite(line.from, line.to);
  return sets.components() == 1;
}

inline bool is_connected(std::span<const Line> lines,
                         const std::vector<bool>& selected, int n_buses) {
  if (n_buses <= 1) return true;
  DisjointSets sets(n_buses);
  for (std::size_t m = 0; m < lines.size(); ++m) {
    if (selected[m]) sets.unite(lines[m].from, lines[m].to);
  }
  return sets.components() == 1;
}

// Connectivity read off the off-diagonal pattern of a full Laplacian.
inline bool laplacian_connected(const Eigen::MatrixXd& full) {
  const int n = static_cast<int>(full.rows());
  if (n <= 1) return true;
  DisjointSets sets(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (full(i, j) != 0.0) sets.unite(i, j);
    }
  }
  return sets.components() == 1;
}

struct WeightedEdge {
  int u = 0;
  int v = 0;
  double weight = 1.0;
};

struct WeightedGraph {
  int n_vertices = 0;
  std::vector<WeightedEdge> edges;
};

// Same vertex set, edge weights x_ij = 1 / b_ij.
inline WeightedGraph inverse_weight_graph(std::span<const Line> lines,
                                          int n_buses) {
  WeightedGraph g;
  g.n_vertices = n_buses;
  g.edges.reserve(lines.size());
  for (const Line& line : lines) {
    g.edges.push_back({line.from, line.to, 1.0 / line.susceptance});
  }
  return g;
}

inline bool is_connected(const WeightedGraph& g) {
  if (g.n_vertices <= 1) return true;
  DisjointSets sets(g.n_vertices);
  for (const WeightedEdge& e : g.edges) sets.unite(e.u, e.v);
  return sets.components() == 1;
}

inline void require_connected(const WeightedGraph& g) {
  if (!is_connected(g)) {
    throw GridError(ErrorKind::disconnected, "graph not connected");
  }
}

// Kruskal on descending weights; ties go to the lower edge index.
inline std::vector<int> max_spanning_tree(const WeightedGraph& g) {
  require_connected(g);
  std::vector<int> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return g.edges[a].weight > g.edges[b].weight;
  });
  DisjointSets sets(g.n_vertices);
  std::vector<int> tree;
  for (int e : order) {
    if (sets.unite(g.edges[e].u, g.edges[e].v)) tree.push_back(e);
  }
  std::sort(tree.begin(), tree.end());
  return tree;
}

inline double max_spanning_tree_weight(const WeightedGraph& g) {
  double f = 0.0;
  for (int e : max_spanning_tree(g)) f += g.edges[e].weight;
  return f;
}

// Dijkstra from the reference; entry [reference] is zero.
inline std::vector<double> shortest_path_weights(const WeightedGraph& g,
                                                 int reference) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::pair<int, double>>> adj(g.n_vertices);
  for (const WeightedEdge& e : g.edges) {
    if (e.weight < 0.0) {
      throw GridError(ErrorKind::invalid_input, "negative edge weight");
    }
    adj[e.u].push_back({e.v, e.weight});
    adj[e.v].push_back({e.u, e.weight});
  }
  std::vector<double> dist(g.n_vertices, inf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[reference] = 0.0;
  heap.push({0.0, reference});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (auto [w, len] : adj[v]) {
      if (d + len < dist[w]) {
        dist[w] = d + len;
        heap.push({dist[w], w});
      }
    }
  }
  for (int v = 0; v < g.n_vertices; ++v) {
    if (dist[v] == inf) {
      throw GridError(ErrorKind::disconnected,
                      "bus " + std::to_string(v) +
                          " unreachable from the reference");
    }
  }
  return dist;
}

namespace detail {

// Edmonds-Karp on an undirected capacitated graph.
class UndirectedMaxFlow {
 public:
  UndirectedMaxFlow(int n, const std::vector<WeightedEdge>& edges,
                    const std::vector<double>& capacity)
      : n_(n), head_(n, -1) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      add_arc(edges[e].u, edges[e].v, capacity[e]);
      add_arc(edges[e].v, edges[e].u, capacity[e]);
    }
  }

  double run(int source, int sink) {
    for (Arc& a : arcs_) a.flow = 0.0;
    double total = 0.0;
    std::vector<int> via(n_);
    for (;;) {
      std::fill(via.begin(), via.end(), -1);
      std::queue<int> frontier;
      frontier.push(source);
      std::vector<bool> seen(n_, false);
      seen[source] = true;
      while (!frontier.empty() && !seen[sink]) {
        int v = frontier.front();
        frontier.pop();
        for (int a = head_[v]; a != -1; a = arcs_[a].next) {
          const Arc& arc = arcs_[a];
          if (!seen[arc.to] && residual(a) > kEps) {
            seen[arc.to] = true;
            via[arc.to] = a;
            frontier.push(arc.to);
          }
        }
      }
      if (!seen[sink]) break;
      double push = std::numeric_limits<double>::infinity();
      for (int v = sink; v != source; v = arcs_[via[v] ^ 1].to) {
        push = std::min(push, residual(via[v]));
      }
      for (int v = sink; v != source; v = arcs_[via[v] ^ 1].to) {
        arcs_[via[v]].flow += push;
        arcs_[via[v] ^ 1].flow -= push;
      }
      total += push;
    }
    return total;
  }

  // Vertices reachable from `source` in the residual graph of the last run.
  std::vector<bool> source_side(int source) const {
    std::vector<bool> seen(n_, false);
    std::queue<int> frontier;
    frontier.push(source);
    seen[source] = true;
    while (!frontier.empty()) {
      int v = frontier.front();
      frontier.pop();
      for (int a = head_[v]; a != -1; a = arcs_[a].next) {
        if (!seen[arcs_[a].to] && residual(a) > kEps) {
          seen[arcs_[a].to] = true;
          frontier.push(arcs_[a].to);
        }
      }
    }
    return seen;
  }

 private:
  static constexpr double kEps = 1e-12;

  struct Arc {
    int to;
    int next;
    double capacity;
    double flow;
  };

  // Arcs come in pairs (2k, 2k+1); each is the residual partner of the other.
  void add_arc(int from, int to, double capacity) {
    arcs_.push_back({to, head_[from], capacity, 0.0});
    head_[from] = static_cast<int>(arcs_.size()) - 1;
  }

  double residual(int a) const { return arcs_[a].capacity - arcs_[a].flow; }

  int n_;
  std::vector<int> head_;
  std::vector<Arc> arcs_;
};

struct MinCut {
  double value = 0.0;
  std::vector<bool> source_side;
};

// Global minimum cut as the best s-t cut over all sinks; ties go to the
// lowest sink index.
inline MinCut global_min_cut(const WeightedGraph& g,
                             const std::vector<double>& capacity, int source) {
  UndirectedMaxFlow flow(g.n_vertices, g.edges, capacity);
  MinCut best;
  best.value = std::numeric_limits<double>::infinity();
  for (int t = 0; t < g.n_vertices; ++t) {
    if (t == source) continue;
    const double value = flow.run(source, t);
    if (value < best.value - 1e-12) {
      best.value = value;
      best.source_side = flow.source_side(source);
    }
  }
  return best;
}

inline std::vector<int> crossing_edges(const WeightedGraph& g,
                                       const std::vector<bool>& side) {
  std::vector<int> out;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (side[g.edges[e].u] != side[g.edges[e].v]) {
      out.push_back(static_cast<int>(e));
    }
  }
  return out;
}

// Repeated min-cut with capacity raising: every cut of value <= 1 exposes one
// unit-capacity edge, which is then raised to 1 + eps so the next round finds
// a different one. Stops once the minimum cut exceeds 1.
inline std::vector<std::pair<int, std::vector<bool>>> unit_cut_edges(
    const WeightedGraph& g, std::vector<double> capacity, int source,
    double eps) {
  std::vector<std::pair<int, std::vector<bool>>> found;
  for (;;) {
    MinCut cut = global_min_cut(g, capacity, source);
    if (cut.value > 1.0 + 1e-9) break;
    int unit = -1;
    for (int e : crossing_edges(g, cut.source_side)) {
      if (capacity[e] > 1e-12) unit = e;
    }
    if (unit < 0) {
      throw GridError(ErrorKind::numeric, "min-cut returned no unit edge");
    }
    capacity[unit] = 1.0 + eps;
    found.push_back({unit, std::move(cut.source_side)});
  }
  return found;
}

}  // namespace detail

struct CriticalEdge {
  int edge = 0;
  std::vector<int> reference_side;  // V_l, holds the reference bus
  std::vector<int> far_side;        // complement of V_l
};

struct CutsetReport {
  std::vector<CriticalEdge> critical;
  // Size-two cutsets (lower index first) that contain no critical edge.
  std::vector<std::pair<int, int>> pair_cutsets;

  std::vector<int> critical_edges() const {
    std::vector<int> out;
    for (const CriticalEdge& c : critical) out.push_back(c.edge);
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline constexpr double kCutsetEpsilon = 0.5;

// Size-1 cutsets by min-cut with unit weights and 1 + eps raising; size-2
// cutsets by rerunning the same loop with one non-critical edge removed and
// critical edges weighted 2 + eps.
inline CutsetReport enumerate_critical_edges(const WeightedGraph& g,
                                             int reference = 0) {
  require_connected(g);
  CutsetReport report;
  if (g.n_vertices <= 1) return report;
  const double eps = kCutsetEpsilon;
  const std::size_t n_edges = g.edges.size();

  std::vector<double> unit(n_edges, 1.0);
  std::vector<bool> is_critical(n_edges, false);
  for (auto& [edge, side] : detail::unit_cut_edges(g, unit, reference, eps)) {
    CriticalEdge c;
    c.edge = edge;
    for (int v = 0; v < g.n_vertices; ++v) {
      (side[v] ? c.reference_side : c.far_side).push_back(v);
    }
    is_critical[edge] = true;
    report.critical.push_back(std::move(c));
  }
  std::sort(report.critical.begin(), report.critical.end(),
            [](const CriticalEdge& a, const CriticalEdge& b) {
              return a.edge < b.edge;
            });

  std::set<std::pair<int, int>> pairs;
  for (std::size_t first = 0; first < n_edges; ++first) {
    if (is_critical[first]) continue;
    std::vector<double> capacity(n_edges, 1.0);
    for (std::size_t e = 0; e < n_edges; ++e) {
      if (is_critical[e]) capacity[e] = 2.0 + eps;
    }
    capacity[first] = 0.0;
    for (auto& [second, side] :
         detail::unit_cut_edges(g, capacity, reference, eps)) {
      const int a = static_cast<int>(first);
      pairs.insert({std::min(a, second), std::max(a, second)});
    }
  }
  report.pair_cutsets.assign(pairs.begin(), pairs.end());
  return report;
}

// Tarjan low-link bridge finding; independent of the min-cut path above.
inline std::vector<int> bridges_oracle(const WeightedGraph& g) {
  const int n = g.n_vertices;
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    adj[g.edges[e].u].push_back({g.edges[e].v, static_cast<int>(e)});
    adj[g.edges[e].v].push_back({g.edges[e].u, static_cast<int>(e)});
  }
  std::vector<int> order(n, -1), low(n, 0), bridges;
  int clock = 0;
  std::function<void(int, int)> visit = [&](int v, int via) {
    order[v] = low[v] = clock++;
    for (auto [w, e] : adj[v]) {
      if (e == via) continue;
      if (order[w] < 0) {
        visit(w, e);
        low[v] = std::min(low[v], low[w]);
        if (low[w] > order[v]) bridges.push_back(e);
      } else {
        low[v] = std::min(low[v], order[w]);
      }
    }
  };
  for (int v = 0; v < n; ++v) {
    if (order[v] < 0) visit(v, -1);
  }
  std::sort(bridges.begin(), bridges.end());
  return bridges;
}

// For a spanning tree, X = reduced-Laplacian inverse, where X_ij is the sum of
// inverse susceptances shared by the reference paths of i and j.
inline Eigen::MatrixXd radial_inverse_by_paths(std::span<const Line> tree,
                                               int n_buses, int reference) {
  if (static_cast<int>(tree.size()) != n_buses - 1 ||
      !is_connected(tree, n_buses)) {
    throw GridError(ErrorKind::invalid_input, "not radial");
  }
  std::vector<std::vector<std::pair<int, double>>> adj(n_buses);
  for (const Line& line : tree) {
    adj[line.from].push_back({line.to, 1.0 / line.susceptance});
    adj[line.to].push_back({line.from, 1.0 / line.susceptance});
  }
  std::vector<int> parent(n_buses, -1), depth(n_buses, 0);
  std::vector<double> dist(n_buses, 0.0);
  std::vector<int> stack{reference};
  std::vector<bool> seen(n_buses, false);
  seen[reference] = true;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (auto [w, x] : adj[v]) {
      if (seen[w]) continue;
      seen[w] = true;
      parent[w] = v;
      depth[w] = depth[v] + 1;
      dist[w] = dist[v] + x;
      stack.push_back(w);
    }
  }
  auto common_ancestor = [&](int a, int b) {
    while (depth[a] > depth[b]) a = parent[a];
    while (depth[b] > depth[a]) b = parent[b];
    while (a != b) {
      a = parent[a];
      b = parent[b];
    }
    return a;
  };
  const int n = n_buses - 1;
  Eigen::MatrixXd x(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = r; c < n; ++c) {
      const int a = bus_of_reduced(r, reference);
      const int b = bus_of_reduced(c, reference);
      x(r, c) = x(c, r) = dist[common_ancestor(a, b)];
    }
  }
  return x;
}

}  // namespace gridtopo
