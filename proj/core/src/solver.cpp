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

#include "wbmpc/solver.hpp"

#include <chrono>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "wbmpc/autodiff.hpp"

namespace wbmpc {

QuadraticModel QuadraticModel::zero(int nx, int nu) {
  QuadraticModel q;
  q.dx = Vector::Zero(nx);
  q.du = Vector::Zero(nu);
  q.dxx = Matrix::Zero(nx, nx);
  q.duu = Matrix::Zero(nu, nu);
  q.dux = Matrix::Zero(nu, nx);
  return q;
}

Vector OptimalControlProblem::initial_input_guess(int /*node*/) const {
  return Vector::Zero(dynamics().input_dim());
}

ConstraintLinearization OptimalControlProblem::state_input_equalities(const Vector& x,
                                                                      const Vector& u, int,
                                                                      bool) const {
  return {Vector(0), Matrix(0, x.size()), Matrix(0, u.size())};
}

ConstraintLinearization OptimalControlProblem::state_equalities(const Vector& x, int) const {
  return {Vector(0), Matrix(0, x.size()), Matrix(0, 0)};
}

std::vector<QuadraticModel> OptimalControlProblem::inequalities(const Vector&, const Vector&,
                                                                int) const {
  return {};
}

Vector OptimalControlProblem::inequality_values(const Vector& x, const Vector& u, int node) const {
  const auto terms = inequalities(x, u, node);
  Vector h(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    h(static_cast<Eigen::Index>(i)) = terms[i].value;
  }
  return h;
}

void SolverSettings::validate() const {
  if (max_iterations < 0 || !(convergence_tolerance > 0.0) || !(integrator_step > 0.0) ||
      !(barrier_weight > 0.0) || !(barrier_relaxation > 0.0) || !(line_search_factor > 0.0) ||
      !(line_search_factor < 1.0) || !(min_step > 0.0) || !(regularization_floor > 0.0) ||
      !(regularization_max > regularization_floor) || !(equality_penalty >= 0.0) ||
      !(state_equality_penalty >= 0.0) || !(divergence_bound > 0.0)) {
    throw ConfigError("invalid solver settings");
  }
}

BarrierValue relaxed_log_barrier(double h, double mu, double delta) {
  if (h > delta) {
    return {-mu * std::log(h), -mu / h, mu / (h * h)};
  }
  const double z = (h - 2.0 * delta) / delta;
  return {mu * (0.5 * z * z - 0.5 - std::log(delta)), mu * z / delta, mu / (delta * delta)};
}

namespace {

// Index of the interval [t_i, t_i+1) containing t, clamped to the grid.
std::size_t locate(const std::vector<double>& times, double t) {
  if (times.size() < 2 || t <= times.front()) {
    return 0;
  }
  if (t >= times.back()) {
    return times.size() - 1;
  }
  const auto it = std::upper_bound(times.begin(), times.end(), t + 1e-12);
  return static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
}

}  // namespace

Vector LinearPolicy::feedforward_at(double t) const { return feedforward[locate(times, t)]; }

const Matrix& LinearPolicy::gain_at(double t) const { return gains[locate(times, t)]; }

Vector LinearPolicy::nominal_state_at(double t) const {
  const std::size_t i = locate(times, t);
  if (i + 1 >= times.size() || t <= times.front()) {
    return nominal_states[i];
  }
  const double a = (t - times[i]) / (times[i + 1] - times[i]);
  return (1.0 - a) * nominal_states[i] + a * nominal_states[i + 1];
}

Vector LinearPolicy::evaluate(double t, const Vector& x) const {
  const std::size_t i = locate(times, t);
  return feedforward[i] + gains[i] * (x - nominal_state_at(t));
}

Vector project_input(const ConstraintLinearization& eq, const Vector& u) {
  if (eq.size() == 0) {
    return u;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(eq.du);
  return u - cod.solve(eq.value);
}

namespace {

void check_state(const Vector& x, const SolverSettings& settings, double t) {
  if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > settings.divergence_bound) {
    throw DivergenceError("rollout diverged at t = " + std::to_string(t));
  }
}

}  // namespace

Trajectory rollout(const OptimalControlProblem& ocp, const LinearPolicy& policy, const Vector& x0,
                   const SolverSettings& settings) {
  const auto& grid = ocp.time_grid();
  const int n = ocp.num_intervals();
  Trajectory traj;
  traj.times = grid;
  traj.states.reserve(n + 1);
  traj.inputs.reserve(n);
  traj.states.push_back(x0);
  check_state(x0, settings, grid.front());
  for (int k = 0; k < n; ++k) {
    const Vector& x = traj.states.back();
    Vector u = policy.evaluate(grid[k], x);
    u = project_input(ocp.state_input_equalities(x, u, k, false), u);
    Vector next = integrate_interval<double>(ocp.dynamics(), x, u, grid[k], ocp.interval(k),
                                             settings.integrator_step);
    check_state(next, settings, grid[k + 1]);
    traj.inputs.push_back(std::move(u));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

namespace {

void add_barrier(QuadraticModel& cost, const QuadraticModel& h, double weight,
                 const SolverSettings& s) {
  const BarrierValue b = relaxed_log_barrier(h.value, s.barrier_weight, s.barrier_relaxation);
  cost.value += weight * b.value;
  cost.dx += weight * b.d1 * h.dx;
  cost.du += weight * b.d1 * h.du;
  cost.dxx += weight * (b.d2 * h.dx * h.dx.transpose() + b.d1 * h.dxx);
  cost.duu += weight * (b.d2 * h.du * h.du.transpose() + b.d1 * h.duu);
  cost.dux += weight * (b.d2 * h.du * h.dx.transpose() + b.d1 * h.dux);
}

void add_state_penalty(QuadraticModel& cost, const ConstraintLinearization& g, double weight,
                       double rho) {
  if (g.size() == 0) {
    return;
  }
  cost.value += weight * 0.5 * rho * g.value.squaredNorm();
  cost.dx += weight * rho * g.dx.transpose() * g.value;
  cost.dxx += weight * rho * g.dx.transpose() * g.dx;
}

}  // namespace

LqData lq_approximation(const OptimalControlProblem& ocp, const Trajectory& nominal,
                        const SolverSettings& settings) {
  const int n = ocp.num_intervals();
  const auto& grid = ocp.time_grid();
  const ContinuousDynamics& dyn = ocp.dynamics();
  LqData lq;
  lq.nodes.resize(n);
  for (int k = 0; k < n; ++k) {
    const Vector& x = nominal.states[k];
    const Vector& u = nominal.inputs[k];
    const double dt = ocp.interval(k);
    LqNode& node = lq.nodes[k];

    FunctionLinearization step = linearize(x, u, [&](const VecX<Dual>& xd, const VecX<Dual>& ud) {
      return integrate_interval<Dual>(dyn, xd, ud, grid[k], dt, settings.integrator_step);
    });
    node.a = std::move(step.dx);
    node.b = std::move(step.du);

    QuadraticModel cost = ocp.running_cost(x, u, k);
    cost.value *= dt;
    cost.dx *= dt;
    cost.du *= dt;
    cost.dxx *= dt;
    cost.duu *= dt;
    cost.dux *= dt;
    for (const QuadraticModel& h : ocp.inequalities(x, u, k)) {
      add_barrier(cost, h, dt, settings);
    }
    add_state_penalty(cost, ocp.state_equalities(x, k), dt, settings.state_equality_penalty);
    node.cost = std::move(cost);
    node.equality = ocp.state_input_equalities(x, u, k, true);
  }
  lq.terminal = ocp.terminal_cost(nominal.states.back());
  add_state_penalty(lq.terminal, ocp.state_equalities(nominal.states.back(), n), 1.0,
                    settings.state_equality_penalty);
  return lq;
}

BackwardPassResult riccati_backward_pass(const LqData& lq, const SolverSettings& settings) {
  const int n = static_cast<int>(lq.nodes.size());
  BackwardPassResult out;
  out.feedforward.resize(n);
  out.gains.resize(n);
  out.value_hessians.resize(n + 1);
  out.value_gradients.resize(n + 1);

  Matrix vxx = lq.terminal.dxx;
  Vector vx = lq.terminal.dx;
  out.value_hessians[n] = vxx;
  out.value_gradients[n] = vx;
  double decrease = 0.0;

  for (int k = n - 1; k >= 0; --k) {
    const LqNode& node = lq.nodes[k];
    const Matrix& a = node.a;
    const Matrix& b = node.b;
    const int nu = static_cast<int>(b.cols());
    const int nx = static_cast<int>(a.cols());

    const Matrix vxx_b = vxx * b;
    const Vector qx = node.cost.dx + a.transpose() * vx;
    const Vector qu = node.cost.du + b.transpose() * vx;
    const Matrix qxx = node.cost.dxx + a.transpose() * vxx * a;
    const Matrix quu = node.cost.duu + b.transpose() * vxx_b;
    const Matrix qux = node.cost.dux + vxx_b.transpose() * a;

    // du = u0 + Ux dx + Z dv satisfies the linearized equalities for any dv.
    Vector u0 = Vector::Zero(nu);
    Matrix ux = Matrix::Zero(nu, nx);
    Matrix z;
    const ConstraintLinearization& eq = node.equality;
    if (eq.size() > 0) {
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(eq.du);
      u0 = -cod.solve(eq.value);
      ux = -cod.solve(eq.dx);
      Eigen::ColPivHouseholderQR<Matrix> qr(eq.du.transpose());
      const int rank = static_cast<int>(qr.rank());
      const Matrix q = qr.householderQ();
      z = q.rightCols(nu - rank);
    } else {
      z = Matrix::Identity(nu, nu);
    }

    Vector k_ff = u0;
    Matrix k_fb = ux;
    if (z.cols() > 0) {
      Matrix qvv = z.transpose() * quu * z;
      qvv = 0.5 * (qvv + qvv.transpose());
      const Vector qv = z.transpose() * (qu + quu * u0);
      const Matrix qvx = z.transpose() * (qux + quu * ux);
      Eigen::LLT<Matrix> llt(qvv);
      double reg = settings.regularization_floor;
      while (llt.info() != Eigen::Success) {
        if (reg > settings.regularization_max) {
          throw RegularizationError("input Hessian not positive definite at node " +
                                    std::to_string(k));
        }
        llt.compute(qvv + reg * Matrix::Identity(qvv.rows(), qvv.cols()));
        reg *= 2.0;
      }
      k_ff -= z * llt.solve(qv);
      k_fb -= z * llt.solve(qvx);
    }

    const Vector quu_k = quu * k_ff;
    vx = qx + k_fb.transpose() * (quu_k + qu) + qux.transpose() * k_ff;
    vxx = qxx + k_fb.transpose() * quu * k_fb + k_fb.transpose() * qux + qux.transpose() * k_fb;
    vxx = 0.5 * (vxx + vxx.transpose());
    decrease -= k_ff.dot(qu) + 0.5 * k_ff.dot(quu_k);

    out.feedforward[k] = std::move(k_ff);
    out.gains[k] = std::move(k_fb);
    out.value_hessians[k] = vxx;
    out.value_gradients[k] = vx;
  }
  out.expected_decrease = decrease;
  return out;
}

namespace {

LinearPolicy make_policy(const Trajectory& nominal, const BackwardPassResult& bp, double step) {
  const std::size_t n = nominal.inputs.size();
  LinearPolicy p;
  p.times = nominal.times;
  p.nominal_states = nominal.states;
  p.feedforward.reserve(n + 1);
  p.gains.reserve(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    p.feedforward.push_back(nominal.inputs[k] + step * bp.feedforward[k]);
    p.gains.push_back(bp.gains[k]);
  }
  p.feedforward.push_back(p.feedforward.back());
  p.gains.push_back(p.gains.back());
  return p;
}

// Policy reproducing `traj` exactly from its own initial state.
LinearPolicy policy_from_trajectory(const Trajectory& traj, const std::vector<Matrix>& gains) {
  LinearPolicy p;
  p.times = traj.times;
  p.nominal_states = traj.states;
  p.feedforward = traj.inputs;
  p.feedforward.push_back(traj.inputs.back());
  p.gains = gains;
  p.gains.push_back(gains.back());
  return p;
}

}  // namespace

LinearPolicy backward_pass(const LqData& lq, const Trajectory& nominal,
                           const SolverSettings& settings) {
  return make_policy(nominal, riccati_backward_pass(lq, settings), 1.0);
}

MeritBreakdown evaluate_merit(const OptimalControlProblem& ocp, const Trajectory& traj,
                              const SolverSettings& settings) {
  MeritBreakdown m;
  m.min_inequality = std::numeric_limits<double>::infinity();
  const int n = ocp.num_intervals();
  for (int k = 0; k < n; ++k) {
    const Vector& x = traj.states[k];
    const Vector& u = traj.inputs[k];
    const double dt = ocp.interval(k);
    m.cost += dt * ocp.running_cost_value(x, u, k);
    const Vector h = ocp.inequality_values(x, u, k);
    for (Eigen::Index i = 0; i < h.size(); ++i) {
      m.barrier +=
          dt * relaxed_log_barrier(h(i), settings.barrier_weight, settings.barrier_relaxation).value;
      m.min_inequality = std::min(m.min_inequality, h(i));
    }
    const ConstraintLinearization g = ocp.state_input_equalities(x, u, k, false);
    if (g.size() > 0) {
      m.penalty += dt * 0.5 * settings.equality_penalty * g.value.squaredNorm();
      m.equality_residual = std::max(m.equality_residual, g.value.lpNorm<Eigen::Infinity>());
    }
    const ConstraintLinearization s = ocp.state_equalities(x, k);
    if (s.size() > 0) {
      m.penalty += dt * 0.5 * settings.state_equality_penalty * s.value.squaredNorm();
      m.equality_residual = std::max(m.equality_residual, s.value.lpNorm<Eigen::Infinity>());
    }
  }
  m.cost += ocp.terminal_cost(traj.states.back()).value;
  const ConstraintLinearization s = ocp.state_equalities(traj.states.back(), n);
  if (s.size() > 0) {
    m.penalty += 0.5 * settings.state_equality_penalty * s.value.squaredNorm();
    m.equality_residual = std::max(m.equality_residual, s.value.lpNorm<Eigen::Infinity>());
  }
  return m;
}

SolveResult slq_solve(const OptimalControlProblem& ocp, const LinearPolicy* warm_start,
                      const SolverSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  const int n = ocp.num_intervals();
  const int nx = ocp.dynamics().state_dim();
  const int nu = ocp.dynamics().input_dim();

  LinearPolicy cold;
  cold.times = ocp.time_grid();
  for (int k = 0; k <= n; ++k) {
    cold.feedforward.push_back(ocp.initial_input_guess(std::min(k, n - 1)));
    cold.gains.push_back(Matrix::Zero(nu, nx));
    cold.nominal_states.push_back(ocp.initial_state());
  }
  // Initial guesses in order of preference: warm policy, the affine policy of
  // one Riccati pass around the reference, open-loop cold start.
  std::vector<std::function<LinearPolicy()>> guesses;
  if (warm_start != nullptr && !warm_start->empty()) {
    guesses.emplace_back([&] { return *warm_start; });
  }
  guesses.emplace_back([&] {
    Trajectory ref;
    ref.times = ocp.time_grid();
    for (int k = 0; k <= n; ++k) {
      ref.states.push_back(ocp.initial_state_guess(k));
    }
    ref.inputs.assign(cold.feedforward.begin(), cold.feedforward.end() - 1);
    return make_policy(ref, riccati_backward_pass(lq_approximation(ocp, ref, settings), settings),
                       1.0);
  });
  guesses.emplace_back([&] { return cold; });

  SolveResult result;
  Trajectory traj;
  for (std::size_t g = 0; g < guesses.size(); ++g) {
    try {
      traj = rollout(ocp, guesses[g](), ocp.initial_state(), settings);
      break;
    } catch (const Error&) {
      if (g + 1 == guesses.size()) {
        throw;
      }
    }
  }
  MeritBreakdown merit = evaluate_merit(ocp, traj, settings);
  std::vector<Matrix> gains(n, Matrix::Zero(nu, nx));

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    const LqData lq = lq_approximation(ocp, traj, settings);
    const BackwardPassResult bp = riccati_backward_pass(lq, settings);
    gains = bp.gains;

    IterationInfo info;
    info.iteration = iter;
    const double scale = std::max(1.0, std::abs(merit.merit()));
    if (bp.expected_decrease < settings.convergence_tolerance * scale) {
      info.cost = merit.cost;
      info.merit = merit.merit();
      info.equality_residual = merit.equality_residual;
      info.min_inequality = merit.min_inequality;
      result.iterations.push_back(info);
      result.converged = true;
      break;
    }

    bool accepted = false;
    double step = 1.0;
    while (step >= settings.min_step - 1e-15) {
      try {
        const LinearPolicy trial = make_policy(traj, bp, step);
        Trajectory candidate = rollout(ocp, trial, ocp.initial_state(), settings);
        const MeritBreakdown m = evaluate_merit(ocp, candidate, settings);
        if (std::isfinite(m.merit()) && m.merit() < merit.merit()) {
          const double gain = merit.merit() - m.merit();
          traj = std::move(candidate);
          merit = m;
          accepted = true;
          result.converged = gain < settings.convergence_tolerance * scale;
          break;
        }
      } catch (const Error&) {
        // Rejected trial (diverged or hit the Euler singularity).
      }
      step *= settings.line_search_factor;
    }

    info.cost = merit.cost;
    info.merit = merit.merit();
    info.equality_residual = merit.equality_residual;
    info.min_inequality = merit.min_inequality;
    info.step = accepted ? step : 0.0;
    result.iterations.push_back(info);
    if (!accepted || result.converged) {
      break;
    }
  }

  result.nominal = traj;
  result.policy = policy_from_trajectory(traj, gains);
  result.cost = merit.cost;
  result.merit = merit.merit();
  result.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SolveResult mpc_step(const OcpFactory& factory, const Vector& x_measured, double t_now,
                     const SolveResult* previous, const MpcSettings& settings) {
  const auto start = std::chrono::steady_clock::now();
  SolverSettings solver = settings.solver;
  const bool warm = previous != nullptr && !previous->policy.empty();
  solver.max_iterations = warm ? settings.iterations_per_cycle : settings.initial_iterations;
  try {
    const std::unique_ptr<OptimalControlProblem> ocp = factory(x_measured, t_now);
    SolveResult result = slq_solve(*ocp, warm ? &previous->policy : nullptr, solver);
    result.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  } catch (const Error& e) {
    if (!warm) {
      throw;
    }
    SolveResult fallback = *previous;
    fallback.degraded = true;
    fallback.failure = e.what();
    fallback.converged = false;
    fallback.iterations.clear();
    fallback.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return fallback;
  }
}

}  // namespace wbmpc
