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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

#include "gridtopo/dynamics.hpp"
#include "gridtopo/error.hpp"
#include "gridtopo/formulation.hpp"
#include "gridtopo/lp.hpp"
#include "gridtopo/netgraph.hpp"

namespace gridtopo {

// trace(W~ L~(z)^-1), or nullopt when the selection leaves a bus isolated.
inline std::optional<double> evaluate_topology(std::span<const Line> lines,
                                               const std::vector<bool>& selected,
                                               int n_buses, int reference,
                                               const Eigen::MatrixXd& w_reduced) {
  if (!is_connected(lines, selected, n_buses)) return std::nullopt;
  if (n_buses == 1) return 0.0;
  const Eigen::MatrixXd l =
      assemble_reduced_laplacian(lines, selected, n_buses, reference);
  Eigen::LLT<Eigen::MatrixXd> llt(l);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::MatrixXd x =
      llt.solve(Eigen::MatrixXd::Identity(l.rows(), l.cols()));
  return w_reduced.cwiseProduct(x).sum();
}

inline std::optional<double> evaluate_topology(const DesignProblem& p,
                                               const std::vector<bool>& selected) {
  const int ref = model_reference(p);
  return evaluate_topology(p.candidates, selected, p.n_buses, ref,
                           p.spec.reduced_W(ref));
}

struct SolverStats {
  long nodes_explored = 0;  // leaves resolved directly plus LP-solved nodes
  long lp_solves = 0;
  long lp_iterations = 0;
  long incumbent_updates = 0;
  long pruned_bound = 0;
  long pruned_infeasible = 0;
  long pruned_disconnected = 0;
  long leaves_evaluated = 0;
  double final_gap = 0.0;
  double wall_seconds = 0.0;
  std::vector<double> incumbent_history;  // best value after each update
};

struct DesignSolution {
  std::vector<int> selected;  // candidate indices, ascending
  std::vector<bool> z;        // per candidate
  double objective = 0.0;     // trace(W~ X)
  std::optional<H2Breakdown> h2;
  Eigen::MatrixXd X;          // reduced inverse at `reference`
  int reference = 0;
  bool certified = true;
  SolverStats stats;
};

namespace detail {

inline double tie_band(double value) {
  return 1e-9 * std::max(1.0, std::abs(value));
}

// Keeps the best value seen and, among solutions within the tie band of it,
// the lexicographically smallest selection.
class TieKeeper {
 public:
  bool offer(double cost, const std::vector<bool>& z) {
    bool improved = false;
    if (!have_ || cost < best_) {
      improved = !have_ || cost < best_ - tie_band(best_);
      best_ = cost;
      have_ = true;
      std::erase_if(pool_, [&](const auto& e) {
        return e.first > best_ + tie_band(best_);
      });
    }
    if (cost <= best_ + tie_band(best_)) pool_.push_back({cost, z});
    return improved;
  }

  bool has_value() const { return have_; }
  double best() const { return best_; }

  // Lexicographically smallest pooled selection and its cost.
  std::pair<double, std::vector<bool>> chosen() const {
    const auto* pick = &pool_.front();
    for (const auto& e : pool_) {
      if (e.second < pick->second) pick = &e;
    }
    return *pick;
  }

 private:
  bool have_ = false;
  double best_ = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, std::vector<bool>>> pool_;
};

inline DesignSolution finish_solution(const DesignProblem& p, double objective,
                                      const std::vector<bool>& z,
                                      const std::optional<MachineParams>& params) {
  DesignSolution s;
  s.z = z;
  s.objective = objective;
  s.reference = model_reference(p);
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (z[m]) s.selected.push_back(static_cast<int>(m));
  }
  s.X = assemble_reduced_laplacian(p.candidates, z, p.n_buses, s.reference)
            .inverse();
  if (params) {
    std::vector<Line> chosen;
    for (int m : s.selected) chosen.push_back(p.candidates[m]);
    s.h2 = h2_squared_closed_form(p.spec, build_laplacian(chosen, p.n_buses, s.reference),
                                  *params);
  }
  return s;
}

}  // namespace detail

struct BruteForceOptions {
  int max_free_lines = 25;
  std::vector<int> forced;  // lines that must be selected
  std::optional<MachineParams> params;
};

// Exhaustive search over every selection of free lines within the budget.
inline DesignSolution brute_force_design(const DesignProblem& p,
                                         const BruteForceOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  p.validate();
  std::vector<bool> fixed(p.candidates.size(), false);
  if (p.mode == DesignMode::augment) {
    for (int e : p.existing()) fixed[e] = true;
  }
  for (int e : opt.forced) fixed[e] = true;
  std::vector<int> free_lines;
  int n_fixed = 0;
  for (std::size_t e = 0; e < fixed.size(); ++e) {
    if (fixed[e]) {
      ++n_fixed;
    } else {
      free_lines.push_back(static_cast<int>(e));
    }
  }
  const int n_free = static_cast<int>(free_lines.size());
  if (n_free > opt.max_free_lines) {
    throw GridError(ErrorKind::invalid_input,
                    "brute force limited to " + std::to_string(opt.max_free_lines) +
                        " free lines, problem has " + std::to_string(n_free));
  }
  const int room = p.budget - n_fixed;
  const int ref = model_reference(p);
  const Eigen::MatrixXd w = p.spec.reduced_W(ref);

  detail::TieKeeper keeper;
  SolverStats stats;
  std::vector<bool> z(p.candidates.size());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n_free); ++mask) {
    if (room < 0 || std::popcount(mask) > room) continue;
    for (std::size_t e = 0; e < z.size(); ++e) z[e] = fixed[e];
    for (int t = 0; t < n_free; ++t) {
      if (mask >> t & 1u) z[free_lines[t]] = true;
    }
    const auto cost = evaluate_topology(p.candidates, z, p.n_buses, ref, w);
    ++stats.leaves_evaluated;
    if (cost && keeper.offer(*cost, z)) {
      ++stats.incumbent_updates;
      stats.incumbent_history.push_back(keeper.best());
    }
  }
  if (!keeper.has_value()) {
    throw GridError(ErrorKind::infeasible, "no connected topology within budget");
  }
  const auto [cost, best_z] = keeper.chosen();
  DesignSolution s = detail::finish_solution(p, cost, best_z, opt.params);
  stats.nodes_explored = stats.leaves_evaluated;
  stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  s.stats = std::move(stats);
  return s;
}

struct NodeRecord {
  long id = 0;
  std::vector<Fix> fixings;  // per free edge of the model
  double bound = 0.0;        // lower bound used for the node
  bool from_lp = false;
};

struct BnbOptions {
  double mip_gap = 1e-6;          // relative, reported certification target
  double integrality_tol = 1e-6;
  bool monotone_screen = true;    // edge-monotonicity bound before each LP
  bool greedy_start = true;       // initial incumbent by greedy line removal
  long node_limit = 0;            // 0 = unlimited
  long log_every = 1000;
  std::ostream* log = nullptr;
  std::function<void(const NodeRecord&)> observer;
  LpOptions lp;
  std::optional<MachineParams> params;
};

namespace detail {

struct Node {
  double bound;
  long id;
  std::vector<Fix> fix;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& model, const DesignProblem& problem,
                 const BnbOptions& opt)
      : m_(model), p_(problem), opt_(opt) {}

  DesignSolution run() {
    const auto start = std::chrono::steady_clock::now();
    if (opt_.greedy_start) greedy_start();
    push(std::vector<Fix>(m_.free_edges.size(), Fix::free),
         -std::numeric_limits<double>::infinity());
    bool exhausted = true;
    while (!open_.empty()) {
      if (opt_.node_limit > 0 && stats_.nodes_explored >= opt_.node_limit) {
        exhausted = false;
        break;
      }
      Node node = open_.top();
      open_.pop();
      if (dominated(node.bound, node.fix)) {
        ++stats_.pruned_bound;
        note_pruned(node.bound);
        continue;
      }
      process(std::move(node));
      if (opt_.log && opt_.log_every > 0 &&
          stats_.nodes_explored >= next_log_ + opt_.log_every) {
        next_log_ += opt_.log_every;
        write_log();
      }
    }
    if (!keeper_.has_value()) {
      throw GridError(ErrorKind::infeasible, "no connected topology within budget");
    }
    double lb = pruned_lb_;
    if (!exhausted && !open_.empty()) lb = std::min(lb, open_.top().bound);
    const double best = keeper_.best();
    stats_.final_gap = lb >= best ? 0.0 : (best - lb) / std::max(std::abs(best), 1e-12);
    if (exhausted) stats_.final_gap = std::min(stats_.final_gap, opt_.mip_gap);
    const auto [cost, z] = keeper_.chosen();
    DesignSolution s = finish_solution(p_, cost, z, opt_.params);
    s.certified = exhausted;
    stats_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    s.stats = std::move(stats_);
    return s;
  }

 private:
  const MilpModel& m_;
  const DesignProblem& p_;
  const BnbOptions& opt_;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
  TieKeeper keeper_;
  SolverStats stats_;
  long next_id_ = 0;
  double pruned_lb_ = std::numeric_limits<double>::infinity();
  long next_log_ = 0;

  void push(std::vector<Fix> fix, double bound) {
    open_.push({bound, next_id_++, std::move(fix)});
  }

  void note_pruned(double bound) { pruned_lb_ = std::min(pruned_lb_, bound); }

  std::vector<bool> selection(const std::vector<Fix>& fix, bool unfixed_on) const {
    std::vector<bool> z(m_.lines.size(), false);
    for (int e : m_.fixed_edges) z[e] = true;
    for (int q = 0; q < m_.n_free(); ++q) {
      z[m_.free_edges[q].line] =
          fix[q] == Fix::on || (fix[q] == Fix::free && unfixed_on);
    }
    return z;
  }

  // No solution below `bound` can beat the incumbent, or tie with it while
  // being lexicographically smaller.
  bool dominated(double bound, const std::vector<Fix>& fix) const {
    if (!keeper_.has_value()) return false;
    const double best = keeper_.best();
    if (bound > best + tie_band(best)) return true;
    if (bound >= best - tie_band(best)) {
      return keeper_.chosen().second < selection(fix, false);
    }
    return false;
  }

  void offer(double cost, const std::vector<bool>& z) {
    ++stats_.leaves_evaluated;
    if (keeper_.offer(cost, z)) {
      ++stats_.incumbent_updates;
      stats_.incumbent_history.push_back(keeper_.best());
    }
  }

  std::optional<double> evaluate(const std::vector<bool>& z) const {
    return evaluate_topology(m_.lines, z, m_.n_buses, m_.reference, m_.w_reduced);
  }

  int count_on(const std::vector<bool>& z) const {
    return static_cast<int>(std::count(z.begin(), z.end(), true));
  }

  int total_budget() const {
    return m_.free_budget + static_cast<int>(m_.fixed_edges.size());
  }

  // A cheap feasible selection for the node: its forced lines plus whatever
  // unfixed lines join the remaining components, in index order.
  std::optional<std::vector<bool>> seed_for(const std::vector<Fix>& fix) const {
    std::vector<bool> z = selection(fix, false);
    std::vector<int> parent(m_.n_buses);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    int components = m_.n_buses;
    auto join = [&](const Line& l) {
      const int a = find(l.from), b = find(l.to);
      if (a == b) return false;
      parent[a] = b;
      --components;
      return true;
    };
    for (std::size_t e = 0; e < z.size(); ++e) {
      if (z[e]) join(m_.lines[e]);
    }
    for (int q = 0; q < m_.n_free(); ++q) {
      const int line = m_.free_edges[q].line;
      if (fix[q] == Fix::free && join(m_.lines[line])) z[line] = true;
    }
    if (components != 1 || count_on(z) > total_budget() || !pairs_ok(z)) {
      return std::nullopt;
    }
    return z;
  }

  bool pairs_ok(const std::vector<bool>& z) const {
    for (auto [a, b] : m_.pair_rows) {
      if (!z[m_.free_edges[a].line] && !z[m_.free_edges[b].line]) return false;
    }
    return true;
  }

  // Drop lines one at a time, each time the one whose loss hurts least,
  // until the budget is met.
  void greedy_start() {
    std::vector<bool> z = selection(std::vector<Fix>(m_.free_edges.size(), Fix::free), true);
    while (count_on(z) > total_budget()) {
      double best = std::numeric_limits<double>::infinity();
      int drop = -1;
      for (int q = 0; q < m_.n_free(); ++q) {
        const int line = m_.free_edges[q].line;
        if (!z[line]) continue;
        z[line] = false;
        if (pairs_ok(z)) {
          const auto c = evaluate(z);
          if (c && *c < best) {
            best = *c;
            drop = line;
          }
        }
        z[line] = true;
      }
      if (drop < 0) return;
      z[drop] = false;
    }
    if (const auto c = evaluate(z)) offer(*c, z);
  }

  // A leaf was found at `fix` with value `z`; queue the parts of this
  // subtree holding lexicographically smaller selections, which can only
  // matter when they tie.
  void spawn_lex_children(const std::vector<Fix>& fix, const std::vector<bool>& z,
                          double bound) {
    std::vector<Fix> prefix = fix;
    for (int q = 0; q < m_.n_free(); ++q) {
      if (fix[q] != Fix::free) continue;
      const bool on = z[m_.free_edges[q].line];
      if (on) {
        std::vector<Fix> child = prefix;
        child[q] = Fix::off;
        push(std::move(child), bound);
      }
      prefix[q] = on ? Fix::on : Fix::off;
    }
  }

  void process(Node node) {
    const std::vector<Fix>& fix = node.fix;
    for (auto [a, b] : m_.pair_rows) {
      if (fix[a] == Fix::off && fix[b] == Fix::off) {
        ++stats_.pruned_infeasible;
        return;
      }
    }
    const std::vector<bool> allowed = selection(fix, true);
    if (!is_connected(m_.lines, allowed, m_.n_buses)) {
      ++stats_.pruned_disconnected;
      return;
    }
    int forced_on = static_cast<int>(m_.fixed_edges.size());
    bool all_fixed = true;
    for (Fix f : fix) {
      if (f == Fix::on) ++forced_on;
      if (f == Fix::free) all_fixed = false;
    }
    if (forced_on > total_budget()) {
      ++stats_.pruned_infeasible;
      return;
    }

    double bound = node.bound;
    if (all_fixed || opt_.monotone_screen) {
      // Every selection in the subtree is a subset of `allowed`.
      const auto c = evaluate(allowed);
      bound = std::max(bound, *c);
      if (dominated(bound, fix)) {
        report(node.id, fix, bound, false);
        ++stats_.pruned_bound;
        note_pruned(bound);
        return;
      }
      if (all_fixed || count_on(allowed) <= total_budget()) {
        ++stats_.nodes_explored;
        report(node.id, fix, bound, false);
        offer(*c, allowed);
        if (!all_fixed) spawn_lex_children(fix, allowed, bound);
        return;
      }
    }

    const auto seed = seed_for(fix);
    auto relaxed = m_.relaxation(fix, false, seed ? &*seed : nullptr);
    if (!relaxed) {
      ++stats_.pruned_infeasible;
      return;
    }
    ++stats_.nodes_explored;
    const LpResult lp = solve_lp(relaxed->lp, opt_.lp);
    ++stats_.lp_solves;
    stats_.lp_iterations += lp.iterations;
    if (lp.status == LpStatus::infeasible) {
      ++stats_.pruned_infeasible;
      return;
    }
    if (lp.status != LpStatus::optimal) {
      throw GridError(ErrorKind::numeric, "relaxation unbounded; bounds on X are not finite");
    }
    bound = std::max(bound, lp.objective);
    report(node.id, fix, bound, true);
    if (dominated(bound, fix)) {
      ++stats_.pruned_bound;
      note_pruned(bound);
      return;
    }

    int branch = -1;
    double most = -1.0;
    std::vector<Fix> rounded = fix;
    for (int q = 0; q < m_.n_free(); ++q) {
      const int col = relaxed->z_var[q];
      if (col < 0) continue;
      const double v = lp.x[col];
      const double frac = std::min(v, 1.0 - v);
      rounded[q] = v >= 0.5 ? Fix::on : Fix::off;
      if (frac > opt_.integrality_tol && frac > most + 1e-12) {
        most = frac;
        branch = q;
      }
    }
    if (branch < 0) {
      const std::vector<bool> z = selection(rounded, false);
      if (const auto c = evaluate(z)) {
        offer(*c, z);
        spawn_lex_children(fix, z, bound);
        return;
      }
      // Integral in the LP yet disconnected: only possible through LP
      // tolerance; fall back to branching on the first unfixed line.
      for (int q = 0; q < m_.n_free() && branch < 0; ++q) {
        if (fix[q] == Fix::free) branch = q;
      }
    }
    std::vector<Fix> off = fix, on = fix;
    off[branch] = Fix::off;
    on[branch] = Fix::on;
    push(std::move(off), bound);
    push(std::move(on), bound);
  }

  void report(long id, const std::vector<Fix>& fix, double bound, bool from_lp) {
    if (opt_.observer) opt_.observer({id, fix, bound, from_lp});
  }

  void write_log() {
    const double inc = keeper_.has_value() ? keeper_.best()
                                           : std::numeric_limits<double>::infinity();
    const double bound = open_.empty() ? inc : std::min(inc, open_.top().bound);
    const double gap = std::isfinite(inc) ? (inc - bound) / std::max(std::abs(inc), 1e-12)
                                          : std::numeric_limits<double>::infinity();
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "nodes %ld, open %zu, incumbent %.9g, bound %.9g, gap %.3g\n",
                  stats_.nodes_explored, open_.size(), inc, bound, gap);
    *opt_.log << buf;
  }
};

}  // namespace detail

inline DesignSolution branch_and_bound(const MilpModel& model,
                                       const DesignProblem& problem,
                                       const BnbOptions& opt = {}) {
  return detail::BranchAndBound(model, problem, opt).run();
}

enum class BoundsChoice { automatic, loose };

struct DesignOptions {
  BoundsChoice bounds = BoundsChoice::automatic;
  bool tighten = true;
  bool brute_force = false;
  BnbOptions bnb;
};

struct DesignRun {
  DesignSolution solution;
  VariableBounds bounds;     // after tightening
  std::vector<int> fixed_on;
  std::vector<std::pair<int, int>> pair_rows;
};

inline DesignRun solve_design(const DesignProblem& p, const DesignOptions& opt = {}) {
  p.validate();
  VariableBounds bounds = opt.bounds == BoundsChoice::loose
                              ? bounds_loose(p.n_reduced())
                              : bounds_auto(p);
  DesignRun run;
  if (opt.tighten) {
    Tightening t = tighten_bounds(p, bounds);
    bounds = std::move(t.bounds);
    run.fixed_on = std::move(t.fixed_on);
    run.pair_rows = std::move(t.pair_rows);
  }
  run.bounds = bounds;
  if (opt.brute_force) {
    run.solution = brute_force_design(p, {25, run.fixed_on, opt.bnb.params});
  } else {
    const MilpModel model = build_milp(p, bounds, run.fixed_on, run.pair_rows);
    run.solution = branch_and_bound(model, p, opt.bnb);
  }
  return run;
}

}  // namespace gridtopo
