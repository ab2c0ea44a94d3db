// Copyright 2026 The wbmpc Authors
//
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

// Constrained sequential linear-quadratic (SLQ) solver.
//
// The continuous-time problem is discretized on the node grid supplied by the
// problem. Between nodes the input is held constant and the dynamics are
// integrated with fixed-step RK4; the LQ model is the exact linearization of
// that discrete map, so on linear-quadratic problems one iteration lands on the
// discrete Riccati solution.
//
// Constraint handling
//   state-input equalities  projected out of the input space in the backward
//                           pass and re-imposed by an input projection during
//                           rollouts (residuals enter the merit as a penalty)
//   state-only equalities   quadratic penalty
//   inequalities            relaxed log barrier

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wbmpc/common.hpp"

namespace wbmpc {

/// x_dot = f(x, u, t), available in double and dual arithmetic.
class ContinuousDynamics {
 public:
  virtual ~ContinuousDynamics() = default;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual Vector flow(const Vector& x, const Vector& u, double t) const = 0;
  virtual VecX<Dual> flow(const VecX<Dual>& x, const VecX<Dual>& u, double t) const = 0;
};

/// Implements both flow() overloads from `template <class S> VecX<S> eval(x, u, t) const`.
template <typename Derived>
class DynamicsAdapter : public ContinuousDynamics {
 public:
  Vector flow(const Vector& x, const Vector& u, double t) const final {
    return static_cast<const Derived&>(*this).template eval<double>(x, u, t);
  }
  VecX<Dual> flow(const VecX<Dual>& x, const VecX<Dual>& u, double t) const final {
    return static_cast<const Derived&>(*this).template eval<Dual>(x, u, t);
  }
};

/// Second-order model of a scalar function of (x, u).
struct QuadraticModel {
  double value = 0.0;
  Vector dx;
  Vector du;
  Matrix dxx;
  Matrix duu;
  Matrix dux;

  static QuadraticModel zero(int nx, int nu);
};

/// g(x, u) ~ value + dx * dx_dev + du * du_dev. Rows are assumed affine in u.
struct ConstraintLinearization {
  Vector value;
  Matrix dx;
  Matrix du;

  int size() const { return static_cast<int>(value.size()); }
};

/// Finite-horizon problem on a fixed node grid.
class OptimalControlProblem {
 public:
  virtual ~OptimalControlProblem() = default;

  virtual const ContinuousDynamics& dynamics() const = 0;
  /// Node times t_0 < ... < t_N (absolute).
  virtual const std::vector<double>& time_grid() const = 0;
  virtual const Vector& initial_state() const = 0;

  /// Input used at `node` when no warm start is available.
  virtual Vector initial_input_guess(int node) const;
  /// State around which the stabilizing initial policy is built.
  virtual Vector initial_state_guess(int /*node*/) const { return initial_state(); }

  /// Running cost rate l(x, u, t_node) and its quadratic model.
  virtual QuadraticModel running_cost(const Vector& x, const Vector& u, int node) const = 0;
  virtual double running_cost_value(const Vector& x, const Vector& u, int node) const {
    return running_cost(x, u, node).value;
  }
  virtual QuadraticModel terminal_cost(const Vector& x) const = 0;

  /// State-input equalities active at `node` (held over the following interval).
  /// The state derivative is only needed for the LQ model.
  virtual ConstraintLinearization state_input_equalities(const Vector& x, const Vector& u, int node,
                                                         bool with_state_derivative) const;
  /// Pure-state equalities, penalized.
  virtual ConstraintLinearization state_equalities(const Vector& x, int node) const;
  /// Inequalities h(x, u) >= 0 with gradients and Hessians.
  virtual std::vector<QuadraticModel> inequalities(const Vector& x, const Vector& u, int node) const;
  virtual Vector inequality_values(const Vector& x, const Vector& u, int node) const;

  int num_nodes() const { return static_cast<int>(time_grid().size()); }
  int num_intervals() const { return num_nodes() - 1; }
  double interval(int node) const { return time_grid()[node + 1] - time_grid()[node]; }
};

struct SolverSettings {
  int max_iterations = 15;
  /// Stop when the relative merit decrease of an iteration falls below this.
  double convergence_tolerance = 1e-6;
  /// RK4 substep length; intervals longer than this are subdivided.
  double integrator_step = 0.015;
  double barrier_weight = 0.1;      // mu_b
  double barrier_relaxation = 5.0;  // delta_b
  double line_search_factor = 0.5;
  double min_step = 1.0 / 64.0;
  double regularization_floor = 1e-6;
  double regularization_max = 1e8;
  double equality_penalty = 100.0;        // merit weight on state-input residuals
  double state_equality_penalty = 100.0;  // penalty weight for pure-state equalities
  double divergence_bound = 1e4;          // max |x|_inf in rollouts

  void validate() const;
};

/// Time-varying affine policy u(t, x) = u_ff(t) + K(t) (x - x_nom(t)).
/// u_ff and K are held from the left node (the solver discretizes with held
/// inputs); x_nom interpolates linearly. Times outside the grid clamp to the
/// first or last node.
struct LinearPolicy {
  std::vector<double> times;
  std::vector<Vector> feedforward;
  std::vector<Matrix> gains;
  std::vector<Vector> nominal_states;

  bool empty() const { return times.empty(); }
  Vector evaluate(double t, const Vector& x) const;
  Vector feedforward_at(double t) const;
  Vector nominal_state_at(double t) const;
  const Matrix& gain_at(double t) const;
  double start_time() const { return times.front(); }
  double end_time() const { return times.back(); }
};

struct Trajectory {
  std::vector<double> times;   // N + 1 nodes
  std::vector<Vector> states;  // N + 1
  std::vector<Vector> inputs;  // N, held over [t_k, t_k+1)
};

struct IterationInfo {
  int iteration = 0;
  double cost = 0.0;
  double merit = 0.0;
  double equality_residual = 0.0;  // max-norm over nodes
  double min_inequality = 0.0;     // smallest h over nodes (inf if none)
  double step = 0.0;               // accepted step, 0 when rejected
};

struct SolveResult {
  LinearPolicy policy;
  Trajectory nominal;
  std::vector<IterationInfo> iterations;
  bool converged = false;
  bool degraded = false;  // set by mpc_step when falling back to a previous policy
  std::string failure;    // reason for the fallback
  double cost = 0.0;
  double merit = 0.0;
  double solve_seconds = 0.0;
};

/// Per-node LQ data of the discretized problem. Cost terms are already
/// multiplied by the interval length.
struct LqNode {
  Matrix a;  // x_{k+1} = a dx + b du
  Matrix b;
  QuadraticModel cost;
  ConstraintLinearization equality;
};

struct LqData {
  std::vector<LqNode> nodes;  // N intervals
  QuadraticModel terminal;    // only value, dx, dxx used
};

struct BarrierValue {
  double value;
  double d1;
  double d2;
};

/// -mu ln(h) for h > delta, C2 quadratic extension below delta.
BarrierValue relaxed_log_barrier(double h, double mu, double delta);

/// One RK4 step of length dt with constant input.
template <typename Scalar>
VecX<Scalar> rk4_step(const ContinuousDynamics& dyn, const VecX<Scalar>& x, const VecX<Scalar>& u,
                      double t, double dt) {
  const VecX<Scalar> k1 = dyn.flow(x, u, t);
  const VecX<Scalar> x2 = x + (0.5 * dt) * k1;
  const VecX<Scalar> k2 = dyn.flow(x2, u, t + 0.5 * dt);
  const VecX<Scalar> x3 = x + (0.5 * dt) * k2;
  const VecX<Scalar> k3 = dyn.flow(x3, u, t + 0.5 * dt);
  const VecX<Scalar> x4 = x + dt * k3;
  const VecX<Scalar> k4 = dyn.flow(x4, u, t + dt);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrate one interval with constant input, subdividing by `max_step`.
template <typename Scalar>
VecX<Scalar> integrate_interval(const ContinuousDynamics& dyn, const VecX<Scalar>& x,
                                const VecX<Scalar>& u, double t, double dt, double max_step) {
  const int steps = std::max(1, static_cast<int>(std::ceil(dt / max_step - 1e-9)));
  const double h = dt / steps;
  VecX<Scalar> xi = x;
  for (int i = 0; i < steps; ++i) {
    xi = rk4_step<Scalar>(dyn, xi, u, t + i * h, h);
  }
  return xi;
}

/// Minimum-norm correction of u onto the linearized equalities: u - D^+ g.
Vector project_input(const ConstraintLinearization& eq, const Vector& u);

/// Forward simulation under `policy` with the equality projection applied at
/// every node. Throws DivergenceError when the state leaves the guard box.
Trajectory rollout(const OptimalControlProblem& ocp, const LinearPolicy& policy, const Vector& x0,
                   const SolverSettings& settings);

LqData lq_approximation(const OptimalControlProblem& ocp, const Trajectory& nominal,
                        const SolverSettings& settings);

/// Affine correction du = k + K dx for every interval.
struct BackwardPassResult {
  std::vector<Vector> feedforward;  // k
  std::vector<Matrix> gains;        // K
  std::vector<Matrix> value_hessians;  // V_xx at nodes 0..N
  std::vector<Vector> value_gradients;
  double expected_decrease = 0.0;  // first-order model decrease at full step (>= 0)
};

BackwardPassResult riccati_backward_pass(const LqData& lq, const SolverSettings& settings);

/// Backward pass packaged as a policy around the nominal trajectory (full step).
LinearPolicy backward_pass(const LqData& lq, const Trajectory& nominal, const SolverSettings& settings);

struct MeritBreakdown {
  double cost = 0.0;
  double barrier = 0.0;
  double penalty = 0.0;
  double equality_residual = 0.0;
  double min_inequality = 0.0;

  double merit() const { return cost + barrier + penalty; }
};

MeritBreakdown evaluate_merit(const OptimalControlProblem& ocp, const Trajectory& traj,
                              const SolverSettings& settings);

SolveResult slq_solve(const OptimalControlProblem& ocp, const LinearPolicy* warm_start,
                      const SolverSettings& settings);

/// Builds the problem for the measured state at t_now.
using OcpFactory =
    std::function<std::unique_ptr<OptimalControlProblem>(const Vector& x_measured, double t_now)>;

struct MpcSettings {
  SolverSettings solver;
  int iterations_per_cycle = 3;
  int initial_iterations = 15;
};

/// One receding-horizon update warm-started from `previous` (if any).
/// On solver failure the previous policy is returned with `degraded` set.
SolveResult mpc_step(const OcpFactory& factory, const Vector& x_measured, double t_now,
                     const SolveResult* previous, const MpcSettings& settings);

}  // namespace wbmpc
