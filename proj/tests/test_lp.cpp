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

#include <limits>
#include <random>

#include "gridtopo/lp.hpp"

namespace gridtopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LinearRow row(std::vector<int> idx, std::vector<double> coef, RowSense sense,
              double rhs) {
  return {std::move(idx), std::move(coef), sense, rhs, ""};
}

TEST(SolveLp, SingleLowerBoundRow) {
  LpProblem p{{1.0}, {-kInf}, {kInf}, {row({0}, {1.0}, RowSense::greater_equal, 1.0)}, {}};
  const LpResult r = solve_lp(p);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(SolveLp, ForcedEquality) {
  LpProblem p{{1.0, 1.0}, {0.0, 0.0}, {2.0, 2.0},
              {row({0, 1}, {1.0, 1.0}, RowSense::equal, 2.0)}, {}};
  const LpResult r = solve_lp(p);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.objective, 2.0, 1e-12);
  EXPECT_NEAR(r.x[0] + r.x[1], 2.0, 1e-12);
}

TEST(SolveLp, ContradictoryRowsAreInfeasible) {
  LpProblem p{{1.0}, {-kInf}, {kInf},
              {row({0}, {1.0}, RowSense::greater_equal, 2.0),
               row({0}, {1.0}, RowSense::less_equal, 1.0)}, {}};
  EXPECT_EQ(solve_lp(p).status, LpStatus::infeasible);

  // Same contradiction hidden in two-variable rows, so phase 1 must find it.
  LpProblem q{{1.0, 0.0}, {0.0, 0.0}, {kInf, 1.0},
              {row({0, 1}, {1.0, 1.0}, RowSense::greater_equal, 2.0),
               row({0, 1}, {1.0, -1.0}, RowSense::less_equal, -0.5),
               row({0, 1}, {1.0, 1.0}, RowSense::less_equal, 1.5)}, {}};
  EXPECT_EQ(solve_lp(q).status, LpStatus::infeasible);
}

TEST(SolveLp, Unbounded) {
  LpProblem p{{-1.0, 0.0}, {0.0, 0.0}, {kInf, 1.0},
              {row({0, 1}, {1.0, -1.0}, RowSense::greater_equal, 0.0)}, {}};
  EXPECT_EQ(solve_lp(p).status, LpStatus::unbounded);
}

TEST(SolveLp, ClassicTwoVariableMaximization) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
  LpProblem p{{-3.0, -5.0}, {0.0, 0.0}, {kInf, kInf},
              {row({0, 1}, {1.0, 0.0}, RowSense::less_equal, 4.0),
               row({0, 1}, {0.0, 2.0}, RowSense::less_equal, 12.0),
               row({0, 1}, {3.0, 2.0}, RowSense::less_equal, 18.0)}, {}};
  const LpResult r = solve_lp(p);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.objective, -36.0, 1e-10);
  EXPECT_NEAR(r.x[0], 2.0, 1e-10);
  EXPECT_NEAR(r.x[1], 6.0, 1e-10);
}

TEST(SolveLp, FreeVariablesAndUpperBounds) {
  // min x - y with y <= 3 (bound), x free, x >= y - 10 (row), x + y <= 5.
  LpProblem p{{1.0, -1.0}, {-kInf, -kInf}, {kInf, 3.0},
              {row({0, 1}, {1.0, -1.0}, RowSense::greater_equal, -10.0),
               row({0, 1}, {1.0, 1.0}, RowSense::less_equal, 5.0)}, {}};
  const LpResult r = solve_lp(p);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.objective, -10.0, 1e-10);
}

// Degenerate LP known to cycle under naive Dantzig pricing (Beale).
TEST(SolveLp, BealeCyclingExample) {
  LpProblem p{{-0.75, 150.0, -0.02, 6.0},
              {0.0, 0.0, 0.0, 0.0},
              {kInf, kInf, kInf, kInf},
              {row({0, 1, 2, 3}, {0.25, -60.0, -0.04, 9.0}, RowSense::less_equal, 0.0),
               row({0, 1, 2, 3}, {0.5, -90.0, -0.02, 3.0}, RowSense::less_equal, 0.0),
               row({2}, {1.0}, RowSense::less_equal, 1.0),
               row({0, 2}, {0.0, 1.0}, RowSense::less_equal, 1.0)}, {}};
  const LpResult r = solve_lp(p);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.objective, -0.05, 1e-10);
}

// Random feasible LPs: the optimum is feasible and no worse than a known
// feasible point.
TEST(SolveLp, RandomBoxedProblemsProperty) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 7;
    const int m = 1 + trial % 9;
    std::vector<double> x0(n);
    for (double& v : x0) v = u(rng);
    LpProblem p;
    p.cost.resize(n);
    p.lower.assign(n, -1.0);
    p.upper.assign(n, 1.0);
    for (double& c : p.cost) c = u(rng);
    for (int i = 0; i < m; ++i) {
      LinearRow r;
      double lhs = 0.0;
      for (int j = 0; j < n; ++j) {
        r.index.push_back(j);
        r.coef.push_back(u(rng));
        lhs += r.coef.back() * x0[j];
      }
      r.sense = static_cast<RowSense>(i % 3);
      r.rhs = r.sense == RowSense::less_equal      ? lhs + 0.1
              : r.sense == RowSense::greater_equal ? lhs - 0.1
                                                   : lhs;
      p.rows.push_back(r);
    }
    const LpResult res = solve_lp(p);
    ASSERT_EQ(res.status, LpStatus::optimal) << "trial " << trial;
    EXPECT_LE(res.max_violation, 1e-8);
    double at_x0 = 0.0;
    for (int j = 0; j < n; ++j) at_x0 += p.cost[j] * x0[j];
    EXPECT_LE(res.objective, at_x0 + 1e-9);

    // Seeding with the known point, or with a point outside the box, must
    // not change the optimal value.
    LpProblem seeded = p;
    seeded.start = x0;
    const LpResult hinted = solve_lp(seeded);
    ASSERT_EQ(hinted.status, LpStatus::optimal) << "trial " << trial;
    EXPECT_LE(hinted.max_violation, 1e-8);
    EXPECT_NEAR(hinted.objective, res.objective, 1e-8 * (1.0 + std::abs(res.objective)));
    seeded.start.assign(n, 5.0);
    const LpResult clamped = solve_lp(seeded);
    ASSERT_EQ(clamped.status, LpStatus::optimal) << "trial " << trial;
    EXPECT_NEAR(clamped.objective, res.objective, 1e-8 * (1.0 + std::abs(res.objective)));
  }
}

TEST(SolveLp, FeasibleStartSkipsPhaseOne) {
  // x + y = 2 and x - y <= 1 with the start (1, 1) already feasible.
  LpProblem p{{-1.0, 0.0}, {0.0, 0.0}, {3.0, 3.0},
              {row({0, 1}, {1.0, 1.0}, RowSense::equal, 2.0),
               row({0, 1}, {1.0, -1.0}, RowSense::less_equal, 1.0)},
              {1.0, 1.0}};
  const LpResult r = solve_lp(p);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.objective, -1.5, 1e-12);
  EXPECT_NEAR(r.x[0], 1.5, 1e-12);
  EXPECT_NEAR(r.x[1], 0.5, 1e-12);
}

}  // namespace
}  // namespace gridtopo
