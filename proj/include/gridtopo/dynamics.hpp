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

// Linearized swing dynamics and the generalized coherence (H2) metric.
//
// State ordering is [theta; omega] over all N+1 buses. The metric is
// evaluated three ways: the closed form for uniform damping, the
// observability Gramian, and explicit impulse-response simulation.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gridtopo/error.hpp"
#include "gridtopo/netgraph.hpp"

namespace gridtopo {

struct MachineParams {
  Eigen::VectorXd inertia;  // M_i > 0
  Eigen::VectorXd damping;  // D_i > 0

  static MachineParams uniform(int n_buses, double inertia, double damping) {
    return {Eigen::VectorXd::Constant(n_buses, inertia),
            Eigen::VectorXd::Constant(n_buses, damping)};
  }

  int n_buses() const { return static_cast<int>(inertia.size()); }

  // The common damping value, if every bus carries the same one.
  std::optional<double> uniform_damping() const {
    if (damping.size() == 0) return std::nullopt;
    const double d = damping(0);
    for (Eigen::Index i = 1; i < damping.size(); ++i) {
      if (std::abs(damping(i) - d) > 1e-12 * std::abs(d)) return std::nullopt;
    }
    return d;
  }

  void validate() const {
    if (damping.size() != inertia.size()) {
      throw GridError(ErrorKind::invalid_input,
                      "inertia and damping sizes differ");
    }
    for (Eigen::Index i = 0; i < inertia.size(); ++i) {
      if (!(inertia(i) > 0.0)) {
        throw GridError(ErrorKind::assumption,
                        "bus " + std::to_string(i) +
                            " has zero inertia; Kron reduction unsupported");
      }
      if (!(damping(i) > 0.0)) {
        throw GridError(ErrorKind::assumption,
                        "bus " + std::to_string(i) +
                            " must have positive damping");
      }
    }
  }
};

struct CoherenceSpec {
  Eigen::MatrixXd W;  // Laplacian of the coherence graph, (N+1) x (N+1)
  Eigen::VectorXd s;  // frequency weights, diagonal of S

  int n_buses() const { return static_cast<int>(W.rows()); }

  Eigen::MatrixXd reduced_W(int reference) const {
    return remove_row_col(W, reference);
  }

  void validate() const {
    const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
    if (W.rows() != W.cols() || W.rows() != s.size()) {
      throw GridError(ErrorKind::invalid_input, "coherence spec size mismatch");
    }
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw GridError(ErrorKind::invalid_input, "W must be symmetric");
    }
    if (W.rowwise().sum().cwiseAbs().maxCoeff() > 1e-9 * scale) {
      throw GridError(ErrorKind::invalid_input, "W rows must sum to zero");
    }
    if (s.size() > 0 && s.minCoeff() < 0.0) {
      throw GridError(ErrorKind::invalid_input, "S entries must be nonnegative");
    }
    if (W.cwiseAbs().maxCoeff() == 0.0 &&
        (s.size() == 0 || s.cwiseAbs().maxCoeff() == 0.0)) {
      throw GridError(ErrorKind::invalid_input, "W and S are both zero");
    }
  }
};

enum class MetricPreset { frequency, losses, coherence };

inline MetricPreset parse_metric_preset(const std::string& name) {
  if (name == "frequency") return MetricPreset::frequency;
  if (name == "losses") return MetricPreset::losses;
  if (name == "coherence") return MetricPreset::coherence;
  throw GridError(ErrorKind::invalid_input, "unknown metric '" + name + "'");
}

inline const char* to_string(MetricPreset preset) {
  switch (preset) {
    case MetricPreset::frequency: return "frequency";
    case MetricPreset::losses: return "losses";
    case MetricPreset::coherence: return "coherence";
  }
  return "?";
}

// frequency: W = 0, S = I. losses: W = L of `lines`, S = 0.
// coherence: W = I - 11^T/(N+1), S = 0.
inline CoherenceSpec preset_spec(MetricPreset kind, std::span<const Line> lines,
                                 int n_buses) {
  CoherenceSpec spec;
  switch (kind) {
    case MetricPreset::frequency:
      spec.W = Eigen::MatrixXd::Zero(n_buses, n_buses);
      spec.s = Eigen::VectorXd::Ones(n_buses);
      break;
    case MetricPreset::losses:
      spec.W = build_laplacian(lines, n_buses, 0).full;
      spec.s = Eigen::VectorXd::Zero(n_buses);
      break;
    case MetricPreset::coherence:
      spec.W = Eigen::MatrixXd::Identity(n_buses, n_buses) -
               Eigen::MatrixXd::Constant(n_buses, n_buses, 1.0 / n_buses);
      spec.s = Eigen::VectorXd::Zero(n_buses);
      break;
  }
  return spec;
}

// Symmetric PSD square root. Eigenvalues within 1e-12 (relative) of zero are
// treated as exact zeros, anything more negative is rejected.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-12 * scale) {
      throw GridError(ErrorKind::invalid_input,
                      "matrix is not positive semidefinite");
    }
    lambda(i) = lambda(i) <= 1e-12 * scale ? 0.0 : std::sqrt(lambda(i));
  }
  return eig.eigenvectors() * lambda.asDiagonal() *
         eig.eigenvectors().transpose();
}

struct StateSpace {
  Eigen::MatrixXd A;  // 2(N+1) x 2(N+1)
  Eigen::MatrixXd B;  // 2(N+1) x (N+1)
  Eigen::MatrixXd C;  // 2(N+1) x 2(N+1), C^T C = blockdiag(W, S)

  int n_buses() const { return static_cast<int>(B.cols()); }
};

inline StateSpace assemble_state_space(const LaplacianMatrix& laplacian,
                                       const MachineParams& params,
                                       const CoherenceSpec& spec) {
  const int n = laplacian.n_buses();
  if (params.n_buses() != n || spec.n_buses() != n) {
    throw GridError(ErrorKind::invalid_input, "dimension mismatch");
  }
  params.validate();
  const Eigen::VectorXd inv_m = params.inertia.cwiseInverse();
  StateSpace ss;
  ss.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ss.A.topRightCorner(n, n).setIdentity();
  ss.A.bottomLeftCorner(n, n) = -(inv_m.asDiagonal() * laplacian.full);
  ss.A.bottomRightCorner(n, n) =
      -(inv_m.cwiseProduct(params.damping)).asDiagonal().toDenseMatrix();
  ss.B = Eigen::MatrixXd::Zero(2 * n, n);
  ss.B.bottomRows(n) = inv_m.asDiagonal().toDenseMatrix();
  ss.C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ss.C.topLeftCorner(n, n) = psd_sqrt(spec.W);
  ss.C.bottomRightCorner(n, n) = spec.s.cwiseSqrt().asDiagonal().toDenseMatrix();
  return ss;
}

struct H2Breakdown {
  double topology_term = 0.0;  // trace(W~ L~^-1) = trace(W L^+)
  double inertia_term = 0.0;   // trace(S M^-1)
  double damping = 0.0;
  double cost = 0.0;           // (topology_term + inertia_term) / (2 d)
};

// trace(W~ L~^-1) with both matrices reduced at `reference`.
inline double reduced_trace_objective(const Eigen::MatrixXd& reduced_w,
                                      const Eigen::MatrixXd& reduced_l) {
  if (reduced_l.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(reduced_l);
  if (llt.info() != Eigen::Success) {
    throw GridError(ErrorKind::disconnected, "singular reduced Laplacian");
  }
  const Eigen::MatrixXd x =
      llt.solve(Eigen::MatrixXd::Identity(reduced_l.rows(), reduced_l.cols()));
  return (reduced_w.cwiseProduct(x.transpose())).sum();
}

inline H2Breakdown h2_squared_closed_form(const CoherenceSpec& spec,
                                          const LaplacianMatrix& laplacian,
                                          const MachineParams& params) {
  params.validate();
  const std::optional<double> d = params.uniform_damping();
  if (!d) {
    throw GridError(ErrorKind::assumption,
                    "closed form needs identical damping on every bus");
  }
  if (!laplacian_connected(laplacian.full)) {
    throw GridError(ErrorKind::disconnected, "singular reduced Laplacian");
  }
  H2Breakdown out;
  out.topology_term = reduced_trace_objective(
      spec.reduced_W(laplacian.reference), laplacian.reduced);
  out.inertia_term = spec.s.cwiseQuotient(params.inertia).sum();
  out.damping = *d;
  out.cost = (out.topology_term + out.inertia_term) / (2.0 * *d);
  return out;
}

// Solves A^T X + X A = -R for symmetric X through the half-vectorized
// Kronecker system; unknowns are X_ij with i <= j.
inline Eigen::MatrixXd solve_lyapunov_kronecker(const Eigen::MatrixXd& a,
                                                const Eigen::MatrixXd& r) {
  const int m = static_cast<int>(a.rows());
  const int p = m * (m + 1) / 2;
  auto slot = [m](int i, int j) {
    if (i > j) std::swap(i, j);
    return i * m - i * (i - 1) / 2 + (j - i);
  };
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd rhs(p);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const int row = slot(i, j);
      rhs(row) = -r(i, j);
      for (int q = 0; q < m; ++q) {
        k(row, slot(q, j)) += a(q, i);  // (A^T X)_ij
        k(row, slot(i, q)) += a(q, j);  // (X A)_ij
      }
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
  const Eigen::VectorXd v = lu.solve(rhs);
  Eigen::MatrixXd x(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) x(i, j) = x(j, i) = v(slot(i, j));
  }
  return x;
}

struct Gramian {
  Eigen::MatrixXd Q;  // 2(N+1) x 2(N+1)

  int n_buses() const { return static_cast<int>(Q.rows() / 2); }
  Eigen::MatrixXd Q1() const { return Q.topLeftCorner(n_buses(), n_buses()); }
  Eigen::MatrixXd Q0() const { return Q.topRightCorner(n_buses(), n_buses()); }
  Eigen::MatrixXd Q2() const {
    return Q.bottomRightCorner(n_buses(), n_buses());
  }
};

namespace detail {

// Coordinates with the uniform angle shift removed: theta_i - theta_0 for
// i >= 1, followed by all frequencies.
struct Deflation {
  Eigen::MatrixXd to_reduced;    // Phi, (2n-1) x 2n
  Eigen::MatrixXd from_reduced;  // Psi, 2n x (2n-1), Phi Psi = I
};

inline Deflation deflation(int n) {
  Deflation d;
  d.to_reduced = Eigen::MatrixXd::Zero(2 * n - 1, 2 * n);
  d.from_reduced = Eigen::MatrixXd::Zero(2 * n, 2 * n - 1);
  for (int i = 1; i < n; ++i) {
    d.to_reduced(i - 1, i) = 1.0;
    d.to_reduced(i - 1, 0) = -1.0;
    d.from_reduced(i, i - 1) = 1.0;
  }
  for (int i = 0; i < n; ++i) {
    d.to_reduced(n - 1 + i, n + i) = 1.0;
    d.from_reduced(n + i, n - 1 + i) = 1.0;
  }
  return d;
}

inline void require_deflatable(const StateSpace& ss) {
  const int n = ss.n_buses();
  const Eigen::VectorXd shift = ss.C.leftCols(n) * Eigen::VectorXd::Ones(n);
  const double scale = std::max(1.0, ss.C.cwiseAbs().maxCoeff());
  if (shift.cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw GridError(ErrorKind::invalid_input,
                    "uniform angle shift is observable (W 1 != 0)");
  }
  Eigen::MatrixXd pattern = ss.A.bottomLeftCorner(n, n);
  if (!laplacian_connected(pattern)) {
    throw GridError(ErrorKind::disconnected, "singular reduced Laplacian");
  }
}

}  // namespace detail

inline Gramian observability_gramian(const StateSpace& ss) {
  detail::require_deflatable(ss);
  const detail::Deflation d = detail::deflation(ss.n_buses());
  const Eigen::MatrixXd a = d.to_reduced * ss.A * d.from_reduced;
  const Eigen::MatrixXd c = ss.C * d.from_reduced;
  const Eigen::MatrixXd q = solve_lyapunov_kronecker(a, c.transpose() * c);
  return {d.to_reduced.transpose() * q * d.to_reduced};
}

inline double lyapunov_residual(const StateSpace& ss, const Gramian& g) {
  return (ss.A.transpose() * g.Q + g.Q * ss.A + ss.C.transpose() * ss.C)
      .norm();
}

inline double h2_squared_gramian(const StateSpace& ss) {
  const Gramian g = observability_gramian(ss);
  return (ss.B.transpose() * g.Q * ss.B).trace();
}

struct SimulationOptions {
  double horizon = 400.0;   // s
  double dt = 0.01;         // s
  int record_stride = 1;    // keep every k-th step; 0 disables recording
};

struct Trajectory {
  std::vector<double> time;
  Eigen::MatrixXd theta;  // samples x buses
  Eigen::MatrixXd omega;  // samples x buses
  std::vector<double> coherence;  // f_c(t), angle spread about the mean
  std::vector<double> loss;       // f(t) = |y(t)|^2
  std::vector<double> energy;     // running integral of |y|^2
  double output_energy = 0.0;
  double tail_fraction = 0.0;     // share of energy gathered in the last 10%
  Eigen::VectorXd peak_abs_omega; // per bus, over the whole horizon
};

namespace detail {

// One RK4 step of x' = A x is x <- P x; the RK4 quadrature of |C x|^2 over
// the step is x^T G x. Both are exact polynomial images of the stage
// formulas for a linear system.
struct Rk4Propagator {
  Eigen::MatrixXd step;
  Eigen::MatrixXd energy;
};

inline Rk4Propagator rk4_propagator(const StateSpace& ss, double h) {
  const Eigen::Index m = ss.A.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd ha = h * ss.A;
  const Eigen::MatrixXd ha2 = ha * ha;
  const Eigen::MatrixXd ha3 = ha2 * ha;
  const Eigen::MatrixXd s2 = id + 0.5 * ha;
  const Eigen::MatrixXd s3 = id + 0.5 * ha + 0.25 * ha2;
  const Eigen::MatrixXd s4 = id + ha + 0.5 * ha2 + 0.25 * ha3;
  const Eigen::MatrixXd q = ss.C.transpose() * ss.C;
  Rk4Propagator p;
  p.step = id + ha + ha2 / 2.0 + ha3 / 6.0 + ha3 * ha / 24.0;
  p.energy = h / 6.0 *
             (q + 2.0 * s2.transpose() * q * s2 + 2.0 * s3.transpose() * q * s3 +
              s4.transpose() * q * s4);
  p.energy = 0.5 * (p.energy + p.energy.transpose());
  return p;
}

inline void require_stable_step(const Rk4Propagator& p, double dt) {
  const double radius = p.step.eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius <= 1.0 + 1e-9)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "integration diverges at dt = %g (step growth %.6g); "
                  "use a smaller dt",
                  dt, radius);
    throw GridError(ErrorKind::numeric, buf);
  }
}

inline void check_options(const SimulationOptions& opt) {
  if (!(opt.dt > 0.0) || !(opt.horizon > 0.0)) {
    throw GridError(ErrorKind::invalid_input, "dt and horizon must be positive");
  }
}

}  // namespace detail

// Response to u = e_bus * delta(t), i.e. x(0+) = B e_bus.
inline Trajectory simulate_impulse(const StateSpace& ss, int bus,
                                   const SimulationOptions& opt = {}) {
  detail::check_options(opt);
  const int n = ss.n_buses();
  if (bus < 0 || bus >= n) {
    throw GridError(ErrorKind::invalid_input, "impulse bus out of range");
  }
  const detail::Rk4Propagator prop = detail::rk4_propagator(ss, opt.dt);
  detail::require_stable_step(prop, opt.dt);

  const long steps = std::lround(std::ceil(opt.horizon / opt.dt - 1e-9));
  const long tail_start = steps - steps / 10;
  const long stride = opt.record_stride;
  const long samples = stride > 0 ? steps / stride + 1 : 0;

  Trajectory tr;
  tr.time.reserve(samples);
  tr.theta.resize(samples, n);
  tr.omega.resize(samples, n);
  tr.coherence.reserve(samples);
  tr.loss.reserve(samples);
  tr.energy.reserve(samples);
  tr.peak_abs_omega = Eigen::VectorXd::Zero(n);

  const Eigen::MatrixXd q = ss.C.transpose() * ss.C;
  Eigen::VectorXd x = ss.B.col(bus);
  Eigen::VectorXd next(x.size());
  const double start_norm = x.norm();
  double energy = 0.0;
  double tail_energy = 0.0;
  long row = 0;
  for (long k = 0; k <= steps; ++k) {
    tr.peak_abs_omega = tr.peak_abs_omega.cwiseMax(x.tail(n).cwiseAbs());
    if (stride > 0 && k % stride == 0) {
      const Eigen::VectorXd th = x.head(n);
      tr.time.push_back(k * opt.dt);
      tr.theta.row(row) = th.transpose();
      tr.omega.row(row) = x.tail(n).transpose();
      tr.coherence.push_back((th.array() - th.mean()).square().sum());
      tr.loss.push_back(x.dot(q * x));
      tr.energy.push_back(energy);
      ++row;
    }
    if (k == steps) break;
    const double increment = x.dot(prop.energy * x);
    energy += increment;
    if (k >= tail_start) tail_energy += increment;
    next.noalias() = prop.step * x;
    x.swap(next);
    if (!std::isfinite(energy) || !(x.norm() <= 1e8 * (1.0 + start_norm))) {
      throw GridError(ErrorKind::numeric,
                      "output energy diverged; use a smaller dt");
    }
  }
  tr.output_energy = energy;
  tr.tail_fraction = energy > 0.0 ? tail_energy / energy : 0.0;
  return tr;
}

struct ImpulseEnergies {
  Eigen::VectorXd per_bus;  // integral of |y|^2 for an impulse at each bus
  double total = 0.0;       // summed in bus order
  double tail_fraction = 0.0;
};

// All N+1 impulse responses propagated together as matrix columns.
inline ImpulseEnergies impulse_energies(const StateSpace& ss,
                                        const SimulationOptions& opt = {}) {
  detail::check_options(opt);
  const detail::Rk4Propagator prop = detail::rk4_propagator(ss, opt.dt);
  detail::require_stable_step(prop, opt.dt);
  const long steps = std::lround(std::ceil(opt.horizon / opt.dt - 1e-9));
  const long tail_start = steps - steps / 10;
  const int n = ss.n_buses();
  Eigen::MatrixXd x = ss.B;
  Eigen::MatrixXd next(x.rows(), x.cols());
  Eigen::MatrixXd gx(x.rows(), x.cols());
  Eigen::VectorXd energy = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(n);
  for (long k = 0; k < steps; ++k) {
    gx.noalias() = prop.energy * x;
    const Eigen::VectorXd inc = x.cwiseProduct(gx).colwise().sum().transpose();
    energy += inc;
    if (k >= tail_start) tail += inc;
    next.noalias() = prop.step * x;
    x.swap(next);
    if (k % 1000 == 0 && !energy.allFinite()) {
      throw GridError(ErrorKind::numeric,
                      "output energy diverged; use a smaller dt");
    }
  }
  if (!energy.allFinite()) {
    throw GridError(ErrorKind::numeric, "output energy diverged; use a smaller dt");
  }
  ImpulseEnergies out;
  out.per_bus = energy;
  double tail_total = 0.0;
  for (int b = 0; b < n; ++b) {
    out.total += energy(b);
    tail_total += tail(b);
  }
  out.tail_fraction = out.total > 0.0 ? tail_total / out.total : 0.0;
  return out;
}

// CSV columns: t, theta_0..theta_N, omega_0..omega_N, fc, f; 9 significant
// digits.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const int n = static_cast<int>(tr.theta.cols());
  os << "t";
  for (int i = 0; i < n; ++i) os << ",theta_" << i;
  for (int i = 0; i < n; ++i) os << ",omega_" << i;
  os << ",fc,f\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << buf;
  };
  for (std::size_t r = 0; r < tr.time.size(); ++r) {
    put(tr.time[r]);
    for (int i = 0; i < n; ++i) {
      os << ',';
      put(tr.theta(static_cast<Eigen::Index>(r), i));
    }
    for (int i = 0; i < n; ++i) {
      os << ',';
      put(tr.omega(static_cast<Eigen::Index>(r), i));
    }
    os << ',';
    put(tr.coherence[r]);
    os << ',';
    put(tr.loss[r]);
    os << '\n';
  }
}

}  // namespace gridtopo
