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

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "test_support.hpp"
#include "wbmpc/ocp.hpp"
#include "wbmpc/solver.hpp"
#include "wbmpc_cli/oracles.hpp"

namespace wbmpc {
namespace {

using cli::discrete_lqr_cost;
using cli::double_integrator_problem;
using cli::LinearQuadraticOcp;
using cli::zoh_discretize;
using testing::relative_gap;

Matrix mat(int rows, int cols, std::initializer_list<double> values) {
  Matrix m(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      m(i, j) = *it++;
    }
  }
  return m;
}

LinearPolicy constant_policy(const std::vector<double>& times, const Vector& u, int nx) {
  LinearPolicy p;
  p.times = times;
  for (std::size_t k = 0; k < times.size(); ++k) {
    p.feedforward.push_back(u);
    p.gains.push_back(Matrix::Zero(u.size(), nx));
    p.nominal_states.push_back(Vector::Zero(nx));
  }
  return p;
}

// Stabilizing solution of the discrete algebraic Riccati equation from the
// stable invariant subspace of the symplectic matrix.
Matrix dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  const Eigen::Index n = a.rows();
  const Matrix a_it = a.inverse().transpose();
  const Matrix g = b * r.inverse() * b.transpose();
  Matrix z(2 * n, 2 * n);
  z << a + g * a_it * q, -g * a_it, -a_it * q, a_it;
  Eigen::EigenSolver<Matrix> es(z);
  Eigen::MatrixXcd stable(2 * n, n);
  int col = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (std::abs(es.eigenvalues()(i)) < 1.0) {
      stable.col(col++) = es.eigenvectors().col(i);
    }
  }
  EXPECT_EQ(col, n);
  const Eigen::MatrixXcd p = stable.bottomRows(n) * stable.topRows(n).inverse();
  return p.real();
}

std::unique_ptr<QuadrupedOcp> quadruped_ocp(const ModeSchedule& schedule, const Vector3& velocity,
                                            const Vector& x0) {
  const RobotModel model;
  const Terrain terrain;
  const Vector nominal = nominal_stance_state(model, terrain);
  const ReferenceTrajectory ref = testing::constant_reference(
      nominal.segment<3>(sx::kPos), 0.0, schedule.start(), 0.8, velocity, 0.0, 0.015);
  return assemble_ocp(model, terrain, schedule, ref, CostConfig{}, SwingProfile{}, x0, 0.8);
}

TEST(Rollout, ZeroDynamicsKeepsTheState) {
  const LinearQuadraticOcp ocp(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Identity(2, 2),
                               Matrix::Identity(1, 1), Matrix::Identity(2, 2),
                               Eigen::Vector2d(0.3, -0.7), 1.0, 0.1);
  const Trajectory t =
      rollout(ocp, constant_policy(ocp.time_grid(), Vector::Zero(1), 2), ocp.initial_state(),
              SolverSettings{});
  for (const Vector& x : t.states) {
    EXPECT_EQ(x, ocp.initial_state());
  }
}

TEST(Rollout, LinearSystemMatchesMatrixExponential) {
  const Matrix a = mat(2, 2, {-0.3, 1.0, -2.0, -0.5});
  const Matrix b = mat(2, 1, {0.2, 1.0});
  const LinearQuadraticOcp ocp(a, b, Matrix::Identity(2, 2), Matrix::Identity(1, 1),
                               Matrix::Identity(2, 2), Eigen::Vector2d(1.0, 0.5), 2.0, 0.015);
  const Vector u = Vector::Constant(1, 0.8);
  const Trajectory t =
      rollout(ocp, constant_policy(ocp.time_grid(), u, 2), ocp.initial_state(), SolverSettings{});
  Matrix aug = Matrix::Zero(3, 3);
  aug.topLeftCorner(2, 2) = a;
  aug.topRightCorner(2, 1) = b;
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const Matrix e = (aug * t.times[k]).exp();
    const Vector expected = e.topLeftCorner(2, 2) * ocp.initial_state() + e.topRightCorner(2, 1) * u;
    EXPECT_LT((t.states[k] - expected).norm(), 1e-6);
  }
}

TEST(Rollout, QuadrupedEquilibriumIsStationary) {
  const RobotModel model;
  const Vector x0 = nominal_stance_state(model, Terrain{});
  const auto ocp = quadruped_ocp(ModeSchedule::all_stance(0.0, 0.8), Vector3::Zero(), x0);
  const Vector u = gravity_compensating_input(model, {true, true, true, true});
  const Trajectory t =
      rollout(*ocp, constant_policy(ocp->time_grid(), u, kStateDim), x0, SolverSettings{});
  EXPECT_LT((t.states.back() - x0).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Rollout, DivergenceIsReported) {
  const LinearQuadraticOcp ocp(Matrix::Identity(1, 1) * 50.0, Matrix::Zero(1, 1),
                               Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                               Matrix::Identity(1, 1), Vector::Ones(1), 1.0, 0.015);
  EXPECT_THROW(rollout(ocp, constant_policy(ocp.time_grid(), Vector::Zero(1), 1),
                       ocp.initial_state(), SolverSettings{}),
               DivergenceError);
}

TEST(Barrier, JunctionIsTwiceDifferentiable) {
  const double mu = 0.1, delta = 5.0, eps = 1e-9;
  const BarrierValue lo = relaxed_log_barrier(delta - eps, mu, delta);
  const BarrierValue hi = relaxed_log_barrier(delta + eps, mu, delta);
  EXPECT_NEAR(lo.value, hi.value, 1e-9);
  EXPECT_NEAR(lo.d1, hi.d1, 1e-9);
  EXPECT_NEAR(lo.d2, hi.d2, 1e-9);
  EXPECT_NEAR(hi.value, -mu * std::log(delta), 1e-9);
  // The extension stays finite and convex on infeasible values.
  const BarrierValue bad = relaxed_log_barrier(-3.0, mu, delta);
  EXPECT_TRUE(std::isfinite(bad.value));
  EXPECT_LT(bad.d1, 0.0);
  EXPECT_GT(bad.d2, 0.0);
}

TEST(Barrier, GradientVanishesForInactiveConstraints) {
  EXPECT_LT(std::abs(relaxed_log_barrier(1e6, 0.1, 5.0).d1), 1e-6);
  const double h = 1e-6;
  for (double v : {-2.0, 1.0, 4.9, 5.1, 20.0}) {
    const BarrierValue b = relaxed_log_barrier(v, 0.1, 5.0);
    const double fd = (relaxed_log_barrier(v + h, 0.1, 5.0).value -
                       relaxed_log_barrier(v - h, 0.1, 5.0).value) / (2.0 * h);
    EXPECT_NEAR(b.d1, fd, 1e-7);
  }
}

TEST(LqApproximation, MatchesFiniteDifferencesOfTheDiscreteMap) {
  std::mt19937_64 rng(41);
  const RobotModel model;
  const Vector x0 = testing::random_state(rng, model);
  const ModeSchedule schedule(0.0, 0.8, {{0, 0.1, 0.4}, {3, 0.1, 0.4}});
  const auto ocp = quadruped_ocp(schedule, Vector3(0.5, 0.0, 0.0), x0);
  const SolverSettings settings;
  Trajectory nominal;
  nominal.times = ocp->time_grid();
  for (int k = 0; k <= ocp->num_intervals(); ++k) {
    nominal.states.push_back(testing::random_state(rng, model));
    if (k < ocp->num_intervals()) {
      nominal.inputs.push_back(testing::random_input(rng));
    }
  }
  const LqData lq = lq_approximation(*ocp, nominal, settings);
  const double h = 1e-6;
  for (int k : {0, 7, 20, ocp->num_intervals() - 1}) {
    const Vector& x = nominal.states[k];
    const Vector& u = nominal.inputs[k];
    const auto step = [&](const Vector& xx, const Vector& uu) {
      return integrate_interval<double>(ocp->dynamics(), xx, uu, ocp->time_grid()[k],
                                        ocp->interval(k), settings.integrator_step);
    };
    Matrix fa(kStateDim, kStateDim), fb(kStateDim, kInputDim);
    for (int i = 0; i < kStateDim; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fa.col(i) = (step(xp, u) - step(xm, u)) / (2.0 * h);
    }
    for (int i = 0; i < kInputDim; ++i) {
      Vector up = u, um = u;
      up(i) += h;
      um(i) -= h;
      fb.col(i) = (step(x, up) - step(x, um)) / (2.0 * h);
    }
    EXPECT_LT(relative_gap(lq.nodes[k].a, fa), 1e-6);
    EXPECT_LT(relative_gap(lq.nodes[k].b, fb), 1e-6);
    EXPECT_EQ(lq.nodes[k].equality.size(), ocp->constraint_counts(k).equalities);
  }
}

TEST(BackwardPass, TimeInvariantGainsConvergeToRiccatiGain) {
  const double dt = 0.015;
  const LinearQuadraticOcp ocp = double_integrator_problem(30.0, dt);
  Trajectory nominal;
  nominal.times = ocp.time_grid();
  nominal.states.assign(ocp.num_nodes(), Vector::Zero(2));
  nominal.inputs.assign(ocp.num_intervals(), Vector::Zero(1));
  const SolverSettings settings;
  const BackwardPassResult bp = riccati_backward_pass(lq_approximation(ocp, nominal, settings),
                                                      settings);
  const cli::DiscreteSystem sys = zoh_discretize(ocp.a(), ocp.b(), dt);
  const Matrix qd = dt * ocp.q(), rd = dt * ocp.r();
  const Matrix p = dare(sys.a, sys.b, qd, rd);
  const Matrix gain = -(rd + sys.b.transpose() * p * sys.b).inverse() * sys.b.transpose() * p * sys.a;
  EXPECT_LT((bp.gains.front() - gain).norm() / gain.norm(), 1e-6);
  EXPECT_LT((bp.value_hessians.front() - p).norm() / p.norm(), 1e-6);
}

TEST(BackwardPass, DoubleIntegratorValueApproachesContinuousRiccati) {
  // Q = I, R = 1: P = [[sqrt(3), 1], [1, sqrt(3)]].
  const double dt = 0.001;
  const LinearQuadraticOcp ocp(mat(2, 2, {0.0, 1.0, 0.0, 0.0}), mat(2, 1, {0.0, 1.0}),
                               Matrix::Identity(2, 2), Matrix::Identity(1, 1),
                               Matrix::Zero(2, 2), Eigen::Vector2d(1.0, 0.0), 20.0, dt);
  Trajectory nominal;
  nominal.times = ocp.time_grid();
  nominal.states.assign(ocp.num_nodes(), Vector::Zero(2));
  nominal.inputs.assign(ocp.num_intervals(), Vector::Zero(1));
  SolverSettings settings;
  settings.integrator_step = dt;
  const BackwardPassResult bp =
      riccati_backward_pass(lq_approximation(ocp, nominal, settings), settings);
  const Matrix expected = mat(2, 2, {std::sqrt(3.0), 1.0, 1.0, std::sqrt(3.0)});
  EXPECT_LT((bp.value_hessians.front() - expected).norm() / expected.norm(), 2e-3);
}

TEST(BackwardPass, NoControlAuthorityGivesZeroPolicy) {
  const LinearQuadraticOcp ocp(mat(2, 2, {0.0, 1.0, 0.0, 0.0}), Matrix::Zero(2, 1),
                               Matrix::Identity(2, 2), Matrix::Zero(1, 1), Matrix::Identity(2, 2),
                               Eigen::Vector2d(1.0, 0.0), 1.0, 0.1);
  Trajectory nominal = rollout(ocp, constant_policy(ocp.time_grid(), Vector::Zero(1), 2),
                               ocp.initial_state(), SolverSettings{});
  const BackwardPassResult bp =
      riccati_backward_pass(lq_approximation(ocp, nominal, SolverSettings{}), SolverSettings{});
  for (int k = 0; k < ocp.num_intervals(); ++k) {
    EXPECT_TRUE(bp.feedforward[k].isZero(0.0));
    EXPECT_TRUE(bp.gains[k].isZero(0.0));
  }
}

TEST(BackwardPass, EqualitiesHoldForAnyStateDeviation) {
  std::mt19937_64 rng(42);
  const RobotModel model;
  const Vector x0 = nominal_stance_state(model, Terrain{});
  const auto ocp = quadruped_ocp(ModeSchedule(0.0, 0.8, {{1, 0.2, 0.5}}), Vector3(0.5, 0.0, 0.0), x0);
  const SolverSettings settings;
  const SolveResult res = slq_solve(*ocp, nullptr, settings);
  const LqData lq = lq_approximation(*ocp, res.nominal, settings);
  const BackwardPassResult bp = riccati_backward_pass(lq, settings);
  std::normal_distribution<double> n(0.0, 0.1);
  for (int k = 0; k < ocp->num_intervals(); k += 5) {
    Vector dx(kStateDim);
    for (int i = 0; i < kStateDim; ++i) {
      dx(i) = n(rng);
    }
    const ConstraintLinearization& eq = lq.nodes[k].equality;
    const Vector residual = eq.value + eq.dx * dx + eq.du * (bp.feedforward[k] + bp.gains[k] * dx);
    EXPECT_LT(residual.lpNorm<Eigen::Infinity>(), 1e-8) << "node " << k;
  }
}

TEST(SlqSolve, UnconstrainedLqrMatchesDiscreteRiccati) {
  const LinearQuadraticOcp ocp = double_integrator_problem(2.0, 0.015);
  const SolveResult res = slq_solve(ocp, nullptr, SolverSettings{});
  const double dt = ocp.interval(0);
  const double ref = discrete_lqr_cost(zoh_discretize(ocp.a(), ocp.b(), dt), ocp.q(), ocp.r(),
                                       ocp.qf(), ocp.initial_state(), ocp.num_intervals(), dt);
  EXPECT_LT(std::abs(res.cost - ref) / ref, 1e-6);
  EXPECT_LE(res.iterations.size(), 2u);
  EXPECT_TRUE(res.converged);
}

TEST(SlqSolve, EquilibriumStartNeedsNoImprovement) {
  const RobotModel model;
  const Vector x0 = nominal_stance_state(model, Terrain{});
  const auto ocp = quadruped_ocp(ModeSchedule::all_stance(0.0, 0.8), Vector3::Zero(), x0);
  const SolveResult res = slq_solve(*ocp, nullptr, SolverSettings{});
  EXPECT_TRUE(res.converged);
  ASSERT_EQ(res.iterations.size(), 1u);
  EXPECT_EQ(res.iterations.front().step, 0.0);
  EXPECT_EQ(res.iterations.front().cost, res.cost);
  EXPECT_LT(res.cost, 1e-4);
}

TEST(SlqSolve, InputBoundMatchesBruteForceTranscription) {
  const double u_min = -4.0;
  const LinearQuadraticOcp ocp = cli::bounded_mass_problem(u_min);
  const cli::BruteForceResult bf = cli::brute_force_transcription(ocp, u_min, 10.0);
  for (const Vector& u : bf.inputs) {
    EXPECT_GE(u(0), u_min);
  }
  // The bound is active at the optimum.
  LinearQuadraticOcp free = ocp;
  free.set_input_lower_bound(Vector::Constant(1, -1e9));
  EXPECT_LT(cli::brute_force_transcription(free, -50.0, 10.0).cost, bf.cost - 1e-3);

  SolverSettings settings;
  settings.barrier_weight = 1e-2;
  settings.barrier_relaxation = 1e-3;
  settings.max_iterations = 50;
  settings.convergence_tolerance = 1e-10;
  const SolveResult res = slq_solve(ocp, nullptr, settings);
  EXPECT_LT(std::abs(res.cost - bf.cost) / bf.cost, 0.02);
  EXPECT_GT(res.iterations.back().min_inequality, 0.0);
}

TEST(SlqSolve, AcceptedStepsNeverIncreaseTheMerit) {
  std::mt19937_64 rng(43);
  const RobotModel model;
  Vector x0 = nominal_stance_state(model, Terrain{});
  x0(sx::kTheta) = 0.1;
  x0(sx::kVel + 1) = 0.3;
  x0.segment<kNumJoints>(sx::kJoints) += 0.05 * Vector::Ones(kNumJoints);
  const auto ocp = quadruped_ocp(ModeSchedule(0.0, 0.8, {{0, 0.1, 0.4}, {3, 0.1, 0.4}}),
                                 Vector3(1.0, 0.0, 0.0), x0);
  SolverSettings settings;
  settings.max_iterations = 8;
  const SolveResult res = slq_solve(*ocp, nullptr, settings);
  ASSERT_GE(res.iterations.size(), 2u);
  for (std::size_t i = 1; i < res.iterations.size(); ++i) {
    EXPECT_LE(res.iterations[i].merit, res.iterations[i - 1].merit + 1e-12);
  }
  // Reported metrics describe the returned nominal trajectory.
  const MeritBreakdown m = evaluate_merit(*ocp, res.nominal, settings);
  EXPECT_DOUBLE_EQ(m.merit(), res.merit);
  EXPECT_DOUBLE_EQ(m.equality_residual, res.iterations.back().equality_residual);
}

TEST(SlqSolve, NominalReproducesUnderItsOwnPolicy) {
  const RobotModel model;
  Vector x0 = nominal_stance_state(model, Terrain{});
  x0(sx::kVel) = 0.5;
  const auto ocp = quadruped_ocp(ModeSchedule(0.0, 0.8, {{1, 0.2, 0.5}, {2, 0.2, 0.5}}),
                                 Vector3(1.0, 0.0, 0.0), x0);
  const SolverSettings settings;
  const SolveResult res = slq_solve(*ocp, nullptr, settings);
  const Trajectory replay = rollout(*ocp, res.policy, x0, settings);
  for (std::size_t k = 0; k < replay.states.size(); ++k) {
    EXPECT_LT((replay.states[k] - res.nominal.states[k]).lpNorm<Eigen::Infinity>(), 1e-6);
  }
  EXPECT_TRUE(res.policy.evaluate(0.0, x0).isApprox(res.nominal.inputs.front(), 1e-9));
}

TEST(LinearPolicy, HoldsInputsAndInterpolatesStates) {
  LinearPolicy p;
  p.times = {0.0, 1.0, 2.0};
  p.feedforward = {Vector::Constant(1, 1.0), Vector::Constant(1, 3.0), Vector::Constant(1, 3.0)};
  p.gains = {Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, -1.0)};
  p.nominal_states = {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)};
  EXPECT_DOUBLE_EQ(p.feedforward_at(0.99)(0), 1.0);
  EXPECT_DOUBLE_EQ(p.feedforward_at(1.0)(0), 3.0);
  EXPECT_DOUBLE_EQ(p.nominal_state_at(0.25)(0), 0.25);
  EXPECT_DOUBLE_EQ(p.evaluate(0.5, Vector::Constant(1, 1.0))(0), 1.0 + 2.0 * 0.5);
  EXPECT_DOUBLE_EQ(p.evaluate(-1.0, Vector::Constant(1, 0.0))(0), 1.0);
}

TEST(MpcStep, StationaryReferenceReachesAFixedPoint) {
  const RobotModel model;
  const Vector x = nominal_stance_state(model, Terrain{});
  MpcSettings settings;
  const OcpFactory factory = [&](const Vector& xm, double t) -> std::unique_ptr<OptimalControlProblem> {
    return quadruped_ocp(ModeSchedule::all_stance(t, t + 0.8), Vector3::Zero(), xm);
  };
  SolveResult prev = mpc_step(factory, x, 0.0, nullptr, settings);
  const double merit = prev.merit;
  for (int cycle = 1; cycle < 5; ++cycle) {
    SolveResult next = mpc_step(factory, x, 0.03 * cycle, &prev, settings);
    EXPECT_FALSE(next.degraded);
    EXPECT_LE(static_cast<int>(next.iterations.size()), settings.iterations_per_cycle);
    EXPECT_NEAR(next.merit, merit, 1e-6 * std::abs(merit));
    EXPECT_LT(next.cost, 1e-4);
    prev = std::move(next);
  }
}

TEST(MpcStep, StepInCommandRaisesThenSettlesTheCost) {
  const RobotModel model;
  const Terrain terrain;
  const Vector x_start = nominal_stance_state(model, terrain);
  MpcSettings settings;
  Vector3 command = Vector3::Zero();
  const OcpFactory factory = [&](const Vector& xm, double t) -> std::unique_ptr<OptimalControlProblem> {
    const ReferenceTrajectory ref = testing::constant_reference(
        xm.segment<3>(sx::kPos) - Vector3(0.0, 0.0, xm(sx::kPos + 2) - x_start(sx::kPos + 2)), 0.0,
        t, 0.8, command, 0.0, 0.015);
    return assemble_ocp(model, terrain, ModeSchedule::all_stance(t, t + 0.8), ref, CostConfig{},
                        SwingProfile{}, xm, 0.8);
  };
  // Oracle plant: the solver's own discrete map under the returned policy.
  Vector x = x_start;
  double t = 0.0;
  SolveResult prev = mpc_step(factory, x, t, nullptr, settings);
  const double steady = prev.cost;
  command = Vector3(0.5, 0.0, 0.0);
  std::vector<double> costs;
  for (int cycle = 0; cycle < 12; ++cycle) {
    SolveResult res = mpc_step(factory, x, t, &prev, settings);
    costs.push_back(res.cost);
    const QuadrupedDynamics dyn(model, terrain);
    for (int s = 0; s < 2; ++s) {
      const Vector u = res.policy.evaluate(t, x);
      x = integrate_interval<double>(dyn, x, u, t, 0.015, 0.015);
      t += 0.015;
    }
    prev = std::move(res);
  }
  EXPECT_GT(costs.front(), steady);
  EXPECT_LT(costs.back(), 0.5 * costs.front());
}

TEST(MpcStep, FallsBackToThePreviousPolicyOnFailure) {
  const RobotModel model;
  const Vector x = nominal_stance_state(model, Terrain{});
  const MpcSettings settings;
  bool fail = false;
  const OcpFactory factory = [&](const Vector& xm, double t) -> std::unique_ptr<OptimalControlProblem> {
    if (fail) {
      throw DivergenceError("forced");
    }
    return quadruped_ocp(ModeSchedule::all_stance(t, t + 0.8), Vector3::Zero(), xm);
  };
  const SolveResult first = mpc_step(factory, x, 0.0, nullptr, settings);
  fail = true;
  const SolveResult second = mpc_step(factory, x, 0.03, &first, settings);
  EXPECT_TRUE(second.degraded);
  EXPECT_EQ(second.failure, "forced");
  EXPECT_EQ(second.policy.times, first.policy.times);
  EXPECT_THROW(mpc_step(factory, x, 0.0, nullptr, settings), DivergenceError);
}

TEST(SolverSettings, Validation) {
  SolverSettings s;
  EXPECT_NO_THROW(s.validate());
  s.barrier_relaxation = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

}  // namespace
}  // namespace wbmpc
