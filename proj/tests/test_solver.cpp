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

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

#include "gridtopo/solver.hpp"
#include "support/design_instances.hpp"

namespace gridtopo {
namespace {

using Eigen::MatrixXd;

DesignProblem make_problem(int n, std::vector<Line> lines, int budget, DesignMode mode,
                           MetricPreset preset = MetricPreset::coherence) {
  DesignProblem p;
  p.n_buses = n;
  p.candidates = std::move(lines);
  p.budget = budget;
  p.mode = mode;
  p.spec = preset_spec(preset, p.candidates, n);
  return p;
}

DesignProblem triangle_mesh(int budget) {
  return make_problem(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}, budget,
                      DesignMode::mesh);
}

DesignProblem four_node(DesignMode mode, int budget) {
  return make_problem(4, {{0, 1, 1.0}, {1, 2, 2.0}, {1, 3, 0.5}, {2, 3, 1.0}},
                      budget, mode);
}

// Cost by pseudoinverse of the full Laplacian; independent of reductions.
double oracle_cost(const DesignProblem& p, const std::vector<bool>& z) {
  std::vector<Line> chosen;
  for (std::size_t m = 0; m < z.size(); ++m) {
    if (z[m]) chosen.push_back(p.candidates[m]);
  }
  return (p.spec.W * testing::pseudo_inverse(build_laplacian(chosen, p.n_buses, 0).full))
      .trace();
}

DesignSolution solve_bnb(const DesignProblem& p, bool tighten = true,
                         BoundsChoice bounds = BoundsChoice::automatic) {
  DesignOptions opt;
  opt.tighten = tighten;
  opt.bounds = bounds;
  return solve_design(p, opt).solution;
}

TEST(Evaluate, Examples) {
  const auto path = make_problem(3, {{0, 1, 1.0}, {1, 2, 1.0}}, 2, DesignMode::mesh);
  EXPECT_NEAR(*evaluate_topology(path, {true, true}), 4.0 / 3.0, 1e-12);
  const auto tri = triangle_mesh(3);
  EXPECT_NEAR(*evaluate_topology(tri, {true, true, true}), 2.0 / 3.0, 1e-12);
  EXPECT_FALSE(evaluate_topology(tri, {true, false, false}).has_value());
  EXPECT_FALSE(evaluate_topology(path, {false, true}).has_value());
}

TEST(BruteForce, FourNodeTreesKeepTheBridge) {
  const auto p = four_node(DesignMode::radial, 3);
  const auto s = brute_force_design(p);
  EXPECT_TRUE(s.z[0]);
  double best = 1e300;
  for (const std::vector<bool>& z : {std::vector<bool>{1, 1, 1, 0},
                                     std::vector<bool>{1, 1, 0, 1},
                                     std::vector<bool>{1, 0, 1, 1}}) {
    best = std::min(best, oracle_cost(p, z));
  }
  EXPECT_NEAR(s.objective, best, 1e-12);
  EXPECT_NEAR(oracle_cost(p, s.z), s.objective, 1e-12);
}

TEST(BruteForce, FullBudgetSelectsEverything) {
  const auto p = four_node(DesignMode::mesh, 4);
  EXPECT_EQ(brute_force_design(p).selected, (std::vector<int>{0, 1, 2, 3}));
}

TEST(BruteForce, TriangleTieGoesToLexicographicallySmallest) {
  const auto s = brute_force_design(triangle_mesh(2));
  EXPECT_EQ(s.z, (std::vector<bool>{false, true, true}));
  EXPECT_NEAR(s.objective, 4.0 / 3.0, 1e-12);
}

TEST(BruteForce, GuardRejectsLargeProblems) {
  std::vector<Line> lines;
  for (int i = 0; i < 8; ++i) {
    for (int j = i + 1; j < 8; ++j) lines.push_back({i, j, 1.0});
  }
  const auto p = make_problem(8, lines, 7, DesignMode::mesh);
  EXPECT_THROW(brute_force_design(p), GridError);
}

TEST(BranchAndBound, SmallExamplesMatchBruteForce) {
  for (const auto& p : {four_node(DesignMode::radial, 3), four_node(DesignMode::mesh, 4),
                        triangle_mesh(2), triangle_mesh(3)}) {
    const auto bf = brute_force_design(p);
    const auto bb = solve_bnb(p);
    EXPECT_EQ(bb.z, bf.z);
    EXPECT_EQ(bb.objective, bf.objective);
    EXPECT_TRUE(bb.certified);
  }
}

TEST(BranchAndBound, TriangleTieWithoutPairRows) {
  const auto bb = solve_bnb(triangle_mesh(2), false);
  EXPECT_EQ(bb.z, (std::vector<bool>{false, true, true}));
}

TEST(BranchAndBound, DisconnectedCandidatesInfeasible) {
  const auto p = make_problem(4, {{0, 1, 1.0}, {2, 3, 1.0}}, 3, DesignMode::mesh);
  try {
    solve_bnb(p);
    FAIL() << "expected an error";
  } catch (const GridError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible);
    EXPECT_NE(std::string(e.what()).find("no connected topology within budget"),
              std::string::npos);
  }
}

TEST(BranchAndBound, ScreenResolvesRootInOneNode) {
  auto p = make_problem(3,
                        {{0, 1, 1.0, LineStatus::existing},
                         {1, 2, 1.0, LineStatus::existing},
                         {0, 2, 2.0, LineStatus::candidate}},
                        3, DesignMode::augment);
  const auto s = solve_bnb(p);
  EXPECT_EQ(s.stats.nodes_explored, 1);
  EXPECT_EQ(s.selected, (std::vector<int>{0, 1, 2}));
}

TEST(BranchAndBound, OracleEquivalenceProperty) {
  std::mt19937 rng(515);
  for (int trial = 0; trial < 45; ++trial) {
    const auto mode = static_cast<DesignMode>(trial % 3);
    const auto preset = static_cast<MetricPreset>((trial / 3) % 3);
    const auto p = testing::random_design_problem(rng, mode, preset, {3, 6, 10});
    const auto bf = brute_force_design(p);
    const auto bb = solve_bnb(p);
    EXPECT_EQ(bb.z, bf.z) << "trial " << trial;
    EXPECT_LE(std::abs(bb.objective - bf.objective),
              1e-9 * std::max(1.0, std::abs(bf.objective)))
        << "trial " << trial;
    EXPECT_LE(std::abs(bb.objective - oracle_cost(p, bb.z)),
              1e-9 * std::max(1.0, std::abs(bf.objective)));
    EXPECT_LE(static_cast<int>(bb.selected.size()), p.budget);
  }
}

// Every node bound is at most the best selection reachable from it.
TEST(BranchAndBound, NodeBoundsSandwichSubtreeOptima) {
  std::mt19937 rng(616);
  for (int trial = 0; trial < 12; ++trial) {
    const auto mode = trial % 2 ? DesignMode::radial : DesignMode::augment;
    const auto p = testing::random_design_problem(rng, mode, MetricPreset::coherence,
                                                  {4, 6, 10});
    const auto t = tighten_bounds(p, bounds_auto(p));
    const auto model = build_milp(p, t.bounds, t.fixed_on, t.pair_rows);
    std::vector<NodeRecord> seen;
    BnbOptions opt;
    opt.observer = [&](const NodeRecord& r) { seen.push_back(r); };
    branch_and_bound(model, p, opt);
    ASSERT_FALSE(seen.empty());
    for (const NodeRecord& r : seen) {
      double best = std::numeric_limits<double>::infinity();
      testing::for_each_feasible_selection(p, {}, [&](const std::vector<bool>& z) {
        for (int q = 0; q < model.n_free(); ++q) {
          const bool on = z[model.free_edges[q].line];
          if ((r.fixings[q] == Fix::on && !on) || (r.fixings[q] == Fix::off && on)) return;
        }
        for (int e : model.fixed_edges) {
          if (!z[e]) return;
        }
        best = std::min(best, oracle_cost(p, z));
      });
      if (std::isfinite(best)) {
        EXPECT_LE(r.bound, best + 1e-7 * std::max(1.0, best)) << "trial " << trial;
      }
    }
  }
}

TEST(BranchAndBound, DeterministicAcrossRuns) {
  std::mt19937 rng(717);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = testing::random_design_problem(rng, DesignMode::mesh,
                                                  MetricPreset::coherence, {5, 7, 12});
    const auto a = solve_bnb(p);
    const auto b = solve_bnb(p);
    EXPECT_EQ(a.z, b.z);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.stats.nodes_explored, b.stats.nodes_explored);
    EXPECT_EQ(a.stats.lp_solves, b.stats.lp_solves);
    EXPECT_EQ(a.stats.lp_iterations, b.stats.lp_iterations);
    EXPECT_EQ(a.stats.incumbent_history, b.stats.incumbent_history);
  }
}

TEST(BranchAndBound, IncumbentNeverIncreases) {
  std::mt19937 rng(818);
  for (int trial = 0; trial < 15; ++trial) {
    const auto p = testing::random_design_problem(rng, static_cast<DesignMode>(trial % 3),
                                                  testing::random_preset(rng));
    DesignOptions opt;
    opt.bnb.greedy_start = false;
    const auto s = solve_design(p, opt).solution;
    const auto& h = s.stats.incumbent_history;
    ASSERT_FALSE(h.empty());
    for (std::size_t k = 1; k < h.size(); ++k) EXPECT_LE(h[k], h[k - 1]);
    EXPECT_EQ(static_cast<long>(h.size()), s.stats.incumbent_updates);
  }
}

TEST(BranchAndBound, AugmentUsesWholeBudget) {
  std::mt19937 rng(919);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = testing::random_design_problem(rng, DesignMode::augment,
                                            MetricPreset::coherence);
    const int existing = static_cast<int>(p.existing().size());
    const int extra = static_cast<int>(p.candidates.size()) - existing;
    p.budget = existing + std::min(extra, 2);
    const auto s = solve_bnb(p);
    EXPECT_EQ(static_cast<int>(s.selected.size()), p.budget) << "trial " << trial;
  }
}

TEST(BranchAndBound, TightBoundsNeedNoMoreNodesThanLoose) {
  // Ring of six buses with chords plus a pendant reference.
  const auto p = make_problem(7,
                              {{0, 1, 1.5}, {1, 2, 2.0}, {2, 3, 0.7}, {3, 4, 1.1},
                               {4, 5, 2.5}, {5, 6, 0.9}, {6, 1, 1.7}, {2, 5, 1.2},
                               {3, 6, 0.8}, {1, 4, 3.0}},
                              6, DesignMode::radial);
  const auto tight = solve_bnb(p, true);
  const auto loose = solve_bnb(p, false, BoundsChoice::loose);
  EXPECT_EQ(tight.z, loose.z);
  EXPECT_LE(tight.stats.nodes_explored, loose.stats.nodes_explored);
  EXPECT_EQ(tight.z, brute_force_design(p).z);
}

TEST(BranchAndBound, LogLinesCarryProgressFields) {
  const auto p = four_node(DesignMode::radial, 3);
  std::ostringstream log;
  DesignOptions opt;
  opt.tighten = false;
  opt.bnb.log = &log;
  opt.bnb.log_every = 1;
  solve_design(p, opt);
  const std::string text = log.str();
  ASSERT_FALSE(text.empty());
  for (const char* field : {"nodes ", "open ", "incumbent ", "bound ", "gap "}) {
    EXPECT_NE(text.find(field), std::string::npos) << field;
  }
}

TEST(BranchAndBound, MachineParametersAttachFullCost) {
  auto p = four_node(DesignMode::radial, 3);
  DesignOptions opt;
  opt.bnb.params = MachineParams::uniform(4, 1.0, 0.025);
  const auto s = solve_design(p, opt).solution;
  ASSERT_TRUE(s.h2.has_value());
  EXPECT_NEAR(s.h2->topology_term, s.objective, 1e-10);
  EXPECT_NEAR(s.h2->cost, s.objective / 0.05, 1e-8);
}

}  // namespace
}  // namespace gridtopo
