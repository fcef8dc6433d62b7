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

// Dense bounded-variable primal simplex used as the bounding engine of the
// branch-and-bound search.
//
// Every row receives a slack, so constraints become [A I] x = b with bounds
// on all columns. Rows whose slack cannot absorb the initial residual get an
// artificial column; phase 1 drives the artificials to zero. Pricing is
// Dantzig with a Harris two-pass ratio test; after a run of degenerate
// pivots the solver switches to Bland's rule until the objective moves
// again, which rules out cycling.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gridtopo/error.hpp"

namespace gridtopo {

enum class RowSense { less_equal, greater_equal, equal };

struct LinearRow {
  std::vector<int> index;
  std::vector<double> coef;
  RowSense sense = RowSense::less_equal;
  double rhs = 0.0;
  std::string name;
};

struct LpProblem {
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LinearRow> rows;
  // Optional starting point for the nonbasic columns. Values are clamped to
  // the bounds; rows it leaves unsatisfied get phase-1 artificials.
  std::vector<double> start;

  int num_vars() const { return static_cast<int>(cost.size()); }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
  long iterations = 0;
  double max_violation = 0.0;
};

struct LpOptions {
  double feasibility_tol = 1e-8;  // final residual check on the original rows
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-7;
  int degenerate_streak = 50;
  long iteration_limit = 0;  // 0: automatic
};

// Largest violation of rows and bounds by `x`, relative to 1 + |rhs|.
inline double lp_violation(const LpProblem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < p.num_vars(); ++j) {
    worst = std::max(worst, (p.lower[j] - x[j]) / (1.0 + std::abs(p.lower[j])));
    worst = std::max(worst, (x[j] - p.upper[j]) / (1.0 + std::abs(p.upper[j])));
  }
  for (const LinearRow& row : p.rows) {
    double lhs = 0.0;
    for (std::size_t k = 0; k < row.index.size(); ++k) {
      lhs += row.coef[k] * x[row.index[k]];
    }
    const double scale = 1.0 + std::abs(row.rhs);
    double v = 0.0;
    switch (row.sense) {
      case RowSense::less_equal: v = lhs - row.rhs; break;
      case RowSense::greater_equal: v = row.rhs - lhs; break;
      case RowSense::equal: v = std::abs(lhs - row.rhs); break;
    }
    worst = std::max(worst, v / scale);
  }
  return worst;
}

namespace detail {

class BoundedSimplex {
 public:
  BoundedSimplex(const LpProblem& p, const LpOptions& opt)
      : problem_(p), opt_(opt) {}

  LpResult solve() {
    LpResult result;
    if (!presolve()) return result;
    build();
    long limit = opt_.iteration_limit > 0
                     ? opt_.iteration_limit
                     : 200L * (m_ + ncols_) + 10000;
    if (n_art_ > 0) {
      set_phase_costs(/*phase_one=*/true);
      if (run(limit) == Outcome::unbounded) {
        throw GridError(ErrorKind::numeric, "phase 1 reported unbounded");
      }
      for (int again = 0; again < 2 && artificial_sum() > opt_.feasibility_tol; ++again) {
        reinvert();
        run(limit);
      }
      if (artificial_sum() > opt_.feasibility_tol) {
        result.status = LpStatus::infeasible;
        result.iterations = iterations_;
        return result;
      }
      for (int j = n_ + m_; j < ncols_; ++j) upper_[j] = lower_[j] = 0.0;
    }
    set_phase_costs(/*phase_one=*/false);
    for (int attempt = 0;; ++attempt) {
      if (run(limit) == Outcome::unbounded) {
        result.status = LpStatus::unbounded;
        result.iterations = iterations_;
        return result;
      }
      result.x = structural_values();
      result.max_violation = lp_violation(problem_, result.x);
      if (result.max_violation <= opt_.feasibility_tol) break;
      if (attempt == 2) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "simplex lost feasibility (violation %.3g after %ld "
                      "iterations, %d rows, basis condition %.3g)",
                      result.max_violation, iterations_, m_, basis_condition());
        throw GridError(ErrorKind::numeric, buf);
      }
      reinvert();
    }
    result.status = LpStatus::optimal;
    result.iterations = iterations_;
    result.objective = 0.0;
    for (int j = 0; j < n_; ++j) result.objective += problem_.cost[j] * result.x[j];
    return result;
  }

 private:
  enum class Outcome { optimal, unbounded };
  enum class Where : unsigned char { basic, lower, upper, zero };
  using Tableau =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  // Drops zero coefficients, turns single-variable rows into bounds and
  // checks empty rows. Returns false when infeasibility is already evident.
  bool presolve() {
    n_ = problem_.num_vars();
    var_lower_ = problem_.lower;
    var_upper_ = problem_.upper;
    rows_.clear();
    for (const LinearRow& row : problem_.rows) {
      LinearRow r;
      r.sense = row.sense;
      r.rhs = row.rhs;
      for (std::size_t k = 0; k < row.index.size(); ++k) {
        if (row.coef[k] != 0.0) {
          r.index.push_back(row.index[k]);
          r.coef.push_back(row.coef[k]);
        }
      }
      if (r.index.empty()) {
        const double tol = opt_.feasibility_tol * (1.0 + std::abs(r.rhs));
        const bool ok = (r.sense == RowSense::less_equal && 0.0 <= r.rhs + tol) ||
                        (r.sense == RowSense::greater_equal && 0.0 >= r.rhs - tol) ||
                        (r.sense == RowSense::equal && std::abs(r.rhs) <= tol);
        if (!ok) return false;
        continue;
      }
      if (r.index.size() == 1) {
        const int j = r.index[0];
        const double v = r.rhs / r.coef[0];
        const bool flip = r.coef[0] < 0.0;
        if (r.sense == RowSense::equal) {
          var_lower_[j] = std::max(var_lower_[j], v);
          var_upper_[j] = std::min(var_upper_[j], v);
        } else if ((r.sense == RowSense::less_equal) != flip) {
          var_upper_[j] = std::min(var_upper_[j], v);
        } else {
          var_lower_[j] = std::max(var_lower_[j], v);
        }
        continue;
      }
      rows_.push_back(std::move(r));
    }
    for (int j = 0; j < n_; ++j) {
      const double gap = var_lower_[j] - var_upper_[j];
      if (gap > opt_.feasibility_tol * (1.0 + std::abs(var_lower_[j]))) {
        return false;
      }
      if (gap > 0.0) var_upper_[j] = var_lower_[j];
    }
    return true;
  }

  void build() {
    m_ = static_cast<int>(rows_.size());
    row_scale_.assign(m_, 1.0);
    rhs_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      double big = 0.0;
      for (double a : rows_[i].coef) big = std::max(big, std::abs(a));
      row_scale_[i] = 1.0 / big;
      rhs_[i] = rows_[i].rhs * row_scale_[i];
    }

    std::vector<double> x(n_);
    where_.assign(n_ + m_, Where::lower);
    const bool hinted = static_cast<int>(problem_.start.size()) == n_;
    for (int j = 0; j < n_; ++j) {
      if (hinted) {
        const double v = problem_.start[j];
        x[j] = std::isfinite(v) ? std::clamp(v, var_lower_[j], var_upper_[j]) : 0.0;
        if (std::isfinite(v) || std::isfinite(var_lower_[j]) || std::isfinite(var_upper_[j])) {
          if (x[j] == var_lower_[j]) {
            where_[j] = Where::lower;
          } else if (x[j] == var_upper_[j]) {
            where_[j] = Where::upper;
          } else {
            where_[j] = Where::zero;
          }
          continue;
        }
      }
      if (std::isfinite(var_lower_[j])) {
        x[j] = var_lower_[j];
        where_[j] = Where::lower;
      } else if (std::isfinite(var_upper_[j])) {
        x[j] = var_upper_[j];
        where_[j] = Where::upper;
      } else {
        x[j] = 0.0;
        where_[j] = Where::zero;
      }
    }

    std::vector<double> residual(m_);
    std::vector<int> art_row;
    std::vector<double> art_sign;
    std::vector<double> slack_value(m_);
    lower_.assign(n_ + m_, 0.0);
    upper_.assign(n_ + m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lower_[j] = var_lower_[j];
      upper_[j] = var_upper_[j];
    }
    for (int i = 0; i < m_; ++i) {
      double r = rhs_[i];
      for (std::size_t k = 0; k < rows_[i].index.size(); ++k) {
        r -= rows_[i].coef[k] * row_scale_[i] * x[rows_[i].index[k]];
      }
      residual[i] = r;
      const int s = n_ + i;
      switch (rows_[i].sense) {
        case RowSense::less_equal: lower_[s] = 0.0; upper_[s] = kInf; break;
        case RowSense::greater_equal: lower_[s] = -kInf; upper_[s] = 0.0; break;
        case RowSense::equal: lower_[s] = 0.0; upper_[s] = 0.0; break;
      }
      if (r >= lower_[s] - opt_.primal_tol && r <= upper_[s] + opt_.primal_tol) {
        slack_value[i] = r;
        where_[s] = Where::basic;
      } else {
        const double at = std::clamp(0.0, lower_[s], upper_[s]);
        slack_value[i] = at;
        where_[s] = Where::lower;
        if (lower_[s] == -kInf) where_[s] = Where::upper;
        art_row.push_back(i);
        art_sign.push_back(r - at >= 0.0 ? 1.0 : -1.0);
      }
    }
    n_art_ = static_cast<int>(art_row.size());
    art_index_row_ = art_row;
    ncols_ = n_ + m_ + n_art_;
    lower_.resize(ncols_, 0.0);
    upper_.resize(ncols_, kInf);
    where_.resize(ncols_, Where::basic);

    value_.assign(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) value_[j] = x[j];
    for (int i = 0; i < m_; ++i) value_[n_ + i] = slack_value[i];

    column_sign_.assign(ncols_, 1.0);
    basis_.assign(m_, -1);
    row_sign_.assign(m_, 1.0);
    for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
    for (int a = 0; a < n_art_; ++a) {
      const int i = art_row[a];
      const int col = n_ + m_ + a;
      column_sign_[col] = art_sign[a];
      basis_[i] = col;
      row_sign_[i] = art_sign[a];
      value_[col] = std::abs(residual[i] - slack_value[i]);
    }

    tableau_ = Tableau::Zero(m_, ncols_);
    beta_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      const double sgn = row_sign_[i];
      for (std::size_t k = 0; k < rows_[i].index.size(); ++k) {
        tableau_(i, rows_[i].index[k]) += sgn * rows_[i].coef[k] * row_scale_[i];
      }
      tableau_(i, n_ + i) = sgn;
      beta_[i] = value_[basis_[i]];
    }
    for (int a = 0; a < n_art_; ++a) tableau_(art_row[a], n_ + m_ + a) = 1.0;
  }

  void set_phase_costs(bool phase_one) {
    cost_.assign(ncols_, 0.0);
    if (phase_one) {
      for (int j = n_ + m_; j < ncols_; ++j) cost_[j] = 1.0;
    } else {
      for (int j = 0; j < n_; ++j) cost_[j] = problem_.cost[j];
    }
    recompute_reduced_costs();
  }

  void recompute_reduced_costs() {
    reduced_ = Eigen::Map<const Eigen::RowVectorXd>(cost_.data(), ncols_);
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb != 0.0) reduced_ -= cb * tableau_.row(i);
    }
  }

  double artificial_sum() const {
    double total = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= n_ + m_) total += std::abs(beta_[i]);
    }
    for (int j = n_ + m_; j < ncols_; ++j) {
      if (where_[j] != Where::basic) total += std::abs(value_[j]);
    }
    return total;
  }

  std::vector<double> structural_values() const {
    std::vector<double> x(n_);
    for (int j = 0; j < n_; ++j) x[j] = value_[j];
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) x[basis_[i]] = beta_[i];
    }
    return x;
  }

  // Choose entering column and direction; -1 when optimal.
  int price(bool bland, double& direction) const {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < ncols_; ++j) {
      const Where w = where_[j];
      if (w == Where::basic || lower_[j] == upper_[j]) continue;
      const double d = reduced_(j);
      double dir = 0.0;
      if (d < -opt_.dual_tol && (w == Where::lower || w == Where::zero)) {
        dir = 1.0;
      } else if (d > opt_.dual_tol && (w == Where::upper || w == Where::zero)) {
        dir = -1.0;
      } else {
        continue;
      }
      if (bland) {
        direction = dir;
        return j;
      }
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = j;
        direction = dir;
      }
    }
    return best;
  }

  Outcome run(long limit) {
    int streak = 0;
    bool bland = false;
    for (;;) {
      double dir = 0.0;
      const int enter = price(bland, dir);
      if (enter < 0) return Outcome::optimal;
      if (++iterations_ > limit) {
        throw GridError(ErrorKind::numeric, "simplex iteration limit reached");
      }

      // Harris ratio test. Pass 1 finds the largest step that keeps every
      // basic variable within its bound plus tolerance.
      const double tol = opt_.primal_tol;
      double relaxed = kInf;
      for (int i = 0; i < m_; ++i) {
        const double t = tableau_(i, enter);
        if (std::abs(t) <= opt_.pivot_tol) continue;
        const double rate = -dir * t;
        const int b = basis_[i];
        if (rate < 0.0 && lower_[b] > -kInf) {
          relaxed = std::min(relaxed, (beta_[i] - lower_[b] + tol) / -rate);
        } else if (rate > 0.0 && upper_[b] < kInf) {
          relaxed = std::min(relaxed, (upper_[b] - beta_[i] + tol) / rate);
        }
      }
      // Distance the entering column can travel before hitting its own
      // opposite bound; columns resting between bounds count from where they are.
      double flip = upper_[enter] - lower_[enter];
      if (where_[enter] == Where::zero) {
        flip = dir > 0.0 ? upper_[enter] - value_[enter] : value_[enter] - lower_[enter];
      }
      if (relaxed == kInf && !(flip < kInf)) return Outcome::unbounded;

      // Pass 2 looks at rows whose exact ratio fits under the relaxed step.
      // Normally the largest pivot wins; in anti-cycling mode the lowest
      // basic index wins among pivots of reasonable size.
      double biggest = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double t = tableau_(i, enter);
        if (std::abs(t) <= opt_.pivot_tol || ratio_of(i, enter, dir) > relaxed) continue;
        biggest = std::max(biggest, std::abs(t));
      }
      int leave = -1;
      double step = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double t = tableau_(i, enter);
        if (std::abs(t) <= opt_.pivot_tol) continue;
        const double ratio = ratio_of(i, enter, dir);
        if (ratio > relaxed) continue;
        if (bland) {
          if (std::abs(t) < 0.1 * biggest) continue;
          if (leave < 0 || basis_[i] < basis_[leave]) {
            leave = i;
            step = ratio;
          }
        } else if (std::abs(t) == biggest && leave < 0) {
          leave = i;
          step = ratio;
        }
      }
      step = std::max(step, 0.0);

      if (flip < kInf && (leave < 0 || flip <= step)) {
        move_entering(enter, dir, flip);
        where_[enter] = dir > 0.0 ? Where::upper : Where::lower;
        value_[enter] = dir > 0.0 ? upper_[enter] : lower_[enter];
        streak = 0;
        bland = false;
        continue;
      }
      if (leave < 0) return Outcome::unbounded;

      move_entering(enter, dir, step);
      const int out = basis_[leave];
      const double rate = -dir * tableau_(leave, enter);
      where_[out] = rate < 0.0 ? Where::lower : Where::upper;
      value_[out] = rate < 0.0 ? lower_[out] : upper_[out];
      if (!std::isfinite(value_[out])) {
        value_[out] = beta_[leave];
        where_[out] = Where::zero;
      }
      beta_[leave] = value_[enter];
      basis_[leave] = enter;
      where_[enter] = Where::basic;
      pivot(leave, enter);

      if (step * std::abs(reduced_at_entry_) <= 1e-12) {
        if (++streak >= opt_.degenerate_streak) bland = true;
      } else {
        streak = 0;
        bland = false;
      }
    }
  }

  // Step at which basic row i reaches its bound; infinity if never.
  double ratio_of(int i, int enter, double dir) const {
    const double rate = -dir * tableau_(i, enter);
    const int b = basis_[i];
    if (rate < 0.0 && lower_[b] > -kInf) return (beta_[i] - lower_[b]) / -rate;
    if (rate > 0.0 && upper_[b] < kInf) return (upper_[b] - beta_[i]) / rate;
    return kInf;
  }

  void move_entering(int enter, double dir, double step) {
    reduced_at_entry_ = reduced_(enter);
    if (step == 0.0) return;
    for (int i = 0; i < m_; ++i) {
      const double t = tableau_(i, enter);
      if (t != 0.0) beta_[i] -= dir * t * step;
    }
    value_[enter] += dir * step;
  }

  void pivot(int r, int s) {
    const double inv = 1.0 / tableau_(r, s);
    auto prow = tableau_.row(r);
    nz_.clear();
    for (int k = 0; k < ncols_; ++k) {
      double& v = prow(k);
      if (v == 0.0) continue;
      v *= inv;
      if (std::abs(v) < 1e-14) {
        v = 0.0;
      } else {
        nz_.push_back(k);
      }
    }
    prow(s) = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = tableau_(i, s);
      if (f == 0.0) continue;
      double* dst = tableau_.row(i).data();
      const double* src = prow.data();
      for (int k : nz_) {
        double v = dst[k] - f * src[k];
        dst[k] = std::abs(v) < 1e-14 ? 0.0 : v;
      }
      dst[s] = 0.0;
    }
    const double f = reduced_(s);
    if (f != 0.0) {
      for (int k : nz_) reduced_(k) -= f * prow(k);
      reduced_(s) = 0.0;
    }
  }

  Eigen::MatrixXd original_columns() const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m_, ncols_);
    for (int i = 0; i < m_; ++i) {
      for (std::size_t k = 0; k < rows_[i].index.size(); ++k) {
        a(i, rows_[i].index[k]) += rows_[i].coef[k] * row_scale_[i];
      }
      a(i, n_ + i) = 1.0;
    }
    for (int j = n_ + m_; j < ncols_; ++j) {
      a(art_index_row_[j - n_ - m_], j) = column_sign_[j];
    }
    return a;
  }

  void reinvert() {
    const Eigen::MatrixXd a = original_columns();
    Eigen::MatrixXd basis(m_, m_);
    for (int i = 0; i < m_; ++i) basis.col(i) = a.col(basis_[i]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis);
    tableau_ = lu.solve(a);
    Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m_);
    for (int j = 0; j < ncols_; ++j) {
      if (where_[j] != Where::basic && value_[j] != 0.0) rhs -= value_[j] * a.col(j);
    }
    const Eigen::VectorXd b = lu.solve(rhs);
    for (int i = 0; i < m_; ++i) beta_[i] = b(i);
    recompute_reduced_costs();
  }

  double basis_condition() const {
    if (m_ == 0) return 1.0;
    const Eigen::MatrixXd a = original_columns();
    Eigen::MatrixXd basis(m_, m_);
    for (int i = 0; i < m_; ++i) basis.col(i) = a.col(basis_[i]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : kInf;
  }

  const LpProblem& problem_;
  LpOptions opt_;
  int n_ = 0, m_ = 0, n_art_ = 0, ncols_ = 0;
  std::vector<double> var_lower_, var_upper_;
  std::vector<LinearRow> rows_;
  std::vector<double> row_scale_, rhs_;
  std::vector<double> lower_, upper_, value_, cost_, column_sign_, row_sign_;
  std::vector<int> art_index_row_;
  std::vector<Where> where_;
  std::vector<int> basis_;
  std::vector<double> beta_;
  Tableau tableau_;
  Eigen::RowVectorXd reduced_;
  std::vector<int> nz_;
  long iterations_ = 0;
  double reduced_at_entry_ = 0.0;
};

}  // namespace detail

inline LpResult solve_lp(const LpProblem& p, const LpOptions& opt = {}) {
  if (p.lower.size() != p.cost.size() || p.upper.size() != p.cost.size()) {
    throw GridError(ErrorKind::invalid_input, "LP bound vectors mismatch");
  }
  detail::BoundedSimplex simplex(p, opt);
  return simplex.solve();
}

}  // namespace gridtopo
