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

// Small problems with independently computable solutions.

#include <optional>
#include <vector>

#include "wbmpc/solver.hpp"

namespace wbmpc::cli {

class LinearDynamics final : public DynamicsAdapter<LinearDynamics> {
 public:
  LinearDynamics(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {}
  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int input_dim() const override { return static_cast<int>(b_.cols()); }

  template <typename Scalar>
  VecX<Scalar> eval(const VecX<Scalar>& x, const VecX<Scalar>& u, double /*t*/) const {
    return a_.cast<Scalar>() * x + b_.cast<Scalar>() * u;
  }

 private:
  Matrix a_;
  Matrix b_;
};

/// x_dot = A x + B u, running cost 0.5 x'Qx + 0.5 u'Ru, terminal 0.5 x'Qf x,
/// optional input lower bounds u >= u_min, on a uniform grid.
class LinearQuadraticOcp final : public OptimalControlProblem {
 public:
  LinearQuadraticOcp(Matrix a, Matrix b, Matrix q, Matrix r, Matrix qf, Vector x0, double horizon,
                     double dt);

  void set_input_lower_bound(Vector u_min) { u_min_ = std::move(u_min); }

  const ContinuousDynamics& dynamics() const override { return dynamics_; }
  const std::vector<double>& time_grid() const override { return grid_; }
  const Vector& initial_state() const override { return x0_; }
  QuadraticModel running_cost(const Vector& x, const Vector& u, int node) const override;
  QuadraticModel terminal_cost(const Vector& x) const override;
  std::vector<QuadraticModel> inequalities(const Vector& x, const Vector& u, int node) const override;
  Vector inequality_values(const Vector& x, const Vector& u, int node) const override;

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& q() const { return q_; }
  const Matrix& r() const { return r_; }
  const Matrix& qf() const { return qf_; }

 private:
  Matrix a_, b_, q_, r_, qf_;
  Vector x0_;
  LinearDynamics dynamics_;
  std::vector<double> grid_;
  std::optional<Vector> u_min_;
};

/// Zero-order-hold discretization by the matrix exponential of [[A, B], [0, 0]] dt.
struct DiscreteSystem {
  Matrix a;
  Matrix b;
};
DiscreteSystem zoh_discretize(const Matrix& a, const Matrix& b, double dt);

/// Optimal cost of sum_k dt (0.5 x'Qx + 0.5 u'Ru) + 0.5 x_N' Qf x_N under the
/// discrete system, from the backward Riccati recursion.
double discrete_lqr_cost(const DiscreteSystem& sys, const Matrix& q, const Matrix& r,
                         const Matrix& qf, const Vector& x0, int steps, double dt);

/// Double integrator (position, velocity) driven by acceleration.
LinearQuadraticOcp double_integrator_problem(double horizon = 2.0, double dt = 0.015);

/// Unit point mass driven by a force bounded below by `u_min`, starting at
/// rest 1 m from the origin, on a three-interval grid.
LinearQuadraticOcp bounded_mass_problem(double u_min);

/// Cost of the held input sequence on the exact discretization.
double transcription_cost(const LinearQuadraticOcp& ocp, const std::vector<Vector>& inputs);

struct BruteForceResult {
  double cost = 0.0;
  std::vector<Vector> inputs;
};

/// Grid search over scalar input sequences in [lo, hi], refined `levels` times
/// around the best point.
BruteForceResult brute_force_transcription(const LinearQuadraticOcp& ocp, double lo, double hi,
                                           int points = 61, int levels = 6);

}  // namespace wbmpc::cli
