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
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wbmpc/ocp.hpp"

namespace wbmpc {
namespace {

using testing::constant_reference;
using testing::random_input;
using testing::random_state;
using testing::relative_gap;

std::unique_ptr<QuadrupedOcp> standing_ocp(const ModeSchedule& schedule, const Vector3& velocity,
                                           double horizon = 0.8) {
  const RobotModel model;
  const Terrain terrain;
  const Vector x0 = nominal_stance_state(model, terrain);
  const ReferenceTrajectory ref = constant_reference(x0.segment<3>(sx::kPos), 0.0, schedule.start(),
                                                     horizon, velocity, 0.0, 0.015);
  return assemble_ocp(model, terrain, schedule, ref, CostConfig{}, SwingProfile{}, x0, horizon);
}

ModeSchedule trot_schedule(double horizon = 0.8) {
  return ModeSchedule(0.0, horizon, {{0, 0.1, 0.4}, {3, 0.1, 0.4}, {1, 0.4, 0.7}, {2, 0.4, 0.7}});
}

TEST(TrackingCost, ZeroAtReferenceAndDiagonal) {
  const CostConfig cost;
  std::mt19937_64 rng(31);
  const Vector x_ref = random_state(rng, RobotModel{});
  const Vector u_ref = random_input(rng);
  const QuadraticModel at = tracking_cost(cost.q_diag, cost.r_diag, x_ref, u_ref, x_ref, u_ref);
  EXPECT_EQ(at.value, 0.0);
  EXPECT_TRUE(at.dx.isZero(0.0));
  EXPECT_TRUE(at.du.isZero(0.0));

  Vector x = x_ref;
  x(sx::kPos + 2) += 0.2;
  const QuadraticModel dev = tracking_cost(cost.q_diag, cost.r_diag, x, u_ref, x_ref, u_ref);
  EXPECT_NEAR(dev.value, 0.5 * cost.q_diag(sx::kPos + 2) * 0.04, 1e-12);
}

TEST(TrackingCost, DerivativesMatchFiniteDifferences) {
  const CostConfig cost;
  std::mt19937_64 rng(32);
  const double h = 1e-5;
  for (int s = 0; s < 20; ++s) {
    const Vector x_ref = random_state(rng, RobotModel{});
    const Vector u_ref = random_input(rng);
    const Vector x = random_state(rng, RobotModel{});
    const Vector u = random_input(rng);
    const QuadraticModel m = tracking_cost(cost.q_diag, cost.r_diag, x, u, x_ref, u_ref);
    const auto value = [&](const Vector& xx, const Vector& uu) {
      return tracking_cost(cost.q_diag, cost.r_diag, xx, uu, x_ref, u_ref).value;
    };
    Vector gx(kStateDim), gu(kInputDim);
    Matrix hxx(kStateDim, kStateDim);
    for (int i = 0; i < kStateDim; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      gx(i) = (value(xp, u) - value(xm, u)) / (2.0 * h);
      hxx.col(i) = (tracking_cost(cost.q_diag, cost.r_diag, xp, u, x_ref, u_ref).dx -
                    tracking_cost(cost.q_diag, cost.r_diag, xm, u, x_ref, u_ref).dx) /
                   (2.0 * h);
    }
    for (int i = 0; i < kInputDim; ++i) {
      Vector up = u, um = u;
      up(i) += h;
      um(i) -= h;
      gu(i) = (value(x, up) - value(x, um)) / (2.0 * h);
    }
    EXPECT_LT(relative_gap(m.dx, gx), 1e-6);
    EXPECT_LT(relative_gap(m.du, gu), 1e-6);
    EXPECT_LT(relative_gap(m.dxx, hxx), 1e-6);
    EXPECT_TRUE(m.dux.isZero(0.0));
  }
}

TEST(StanceConstraints, ProjectContactVelocity) {
  const RobotModel model;
  const Terrain terrain;
  Vector x = nominal_stance_state(model, terrain);
  const Vector u = gravity_compensating_input(model, {true, true, true, true});
  for (int leg = 0; leg < kNumLegs; ++leg) {
    EXPECT_TRUE(stance_constraints(model, terrain, x, u, leg).isZero(1e-15));
  }
  // Torso translation equals the contact velocity at zero rates.
  x.segment<3>(sx::kVel) = Vector3(0.7, 0.0, 0.0);
  EXPECT_TRUE(stance_constraints(model, terrain, x, u, 2).isZero(1e-15));
  x.segment<3>(sx::kVel) = Vector3(0.1, 0.2, 0.05);
  const Eigen::Vector2d r = stance_constraints(model, terrain, x, u, 2);
  EXPECT_NEAR(r(0), 0.2, 1e-12);
  EXPECT_NEAR(r(1), 0.05, 1e-12);
}

TEST(SwingConstraints, ForcesAndNormalVelocity) {
  const RobotModel model;
  const Terrain terrain;
  const SwingProfile profile;  // apex 0.09 m
  const ModeSchedule::Swing swing{1, 0.0, 0.3};
  Vector x = nominal_stance_state(model, terrain);
  Vector u = Vector::Zero(kInputDim);

  // Mid-swing the reference normal velocity vanishes.
  EXPECT_NEAR(profile.velocity(0.15, 0.0, 0.3), 0.0, 1e-15);
  EXPECT_TRUE(swing_constraints(model, terrain, profile, swing, x, u, 1, 0.15).isZero(1e-15));
  x.segment<3>(sx::kVel) = Vector3(0.0, 0.0, 0.04);
  const Eigen::Vector4d mid = swing_constraints(model, terrain, profile, swing, x, u, 1, 0.15);
  EXPECT_NEAR(mid(3), 0.04, 1e-12);

  u.segment<3>(ux::force(1)) = Vector3(1.0, 0.0, 0.0);
  const Eigen::Vector4d forced = swing_constraints(model, terrain, profile, swing, x, u, 1, 0.15);
  EXPECT_EQ(forced(0), 1.0);
  EXPECT_EQ(forced(1), 0.0);

  // Following the profile velocity exactly leaves no residual.
  x.segment<3>(sx::kVel) = Vector3(0.0, 0.0, profile.velocity(0.05, 0.0, 0.3));
  u.setZero();
  EXPECT_NEAR(swing_constraints(model, terrain, profile, swing, x, u, 1, 0.05)(3), 0.0, 1e-12);
}

TEST(SwingProfile, VelocityIsTheDerivativeOfHeight) {
  const SwingProfile profile;
  const double duration = 0.3, liftoff = 1.0;
  EXPECT_NEAR(profile.height(0.5), profile.apex_height, 1e-15);
  EXPECT_EQ(profile.height(0.0), 0.0);
  EXPECT_EQ(profile.height(1.0), 0.0);
  const double h = 1e-7;
  double integral = 0.0;
  const int n = 3000;
  for (int i = 0; i < n; ++i) {
    const double t = liftoff + (i + 0.5) * duration / n;
    const double fd = (profile.height((t + h - liftoff) / duration) -
                       profile.height((t - h - liftoff) / duration)) / (2.0 * h);
    EXPECT_NEAR(profile.velocity(t, liftoff, duration), fd, 1e-6);
    integral += profile.velocity(t, liftoff, duration) * duration / n;
  }
  EXPECT_NEAR(integral, 0.0, 1e-9);
}

TEST(FrictionCone, ClosedFormValues) {
  Terrain terrain;
  terrain.friction = 0.7;
  EXPECT_NEAR(friction_cone(Vector3(0.0, 0.0, 10.0), terrain).value, 7.0 - kConeSmoothing, 1e-12);
  EXPECT_NEAR(friction_cone(Vector3(3.0, 4.0, 5.0), terrain).value, -1.5, 1e-4);
  terrain.friction = 1.0;
  EXPECT_NEAR(friction_cone(Vector3(5.0, 0.0, 5.0), terrain).value, 0.0, 1e-4);
}

TEST(FrictionCone, UsesTheSurfaceFrame) {
  Terrain terrain;
  terrain.normal = Vector3(0.2, 0.0, 1.0).normalized();
  terrain.friction = 0.5;
  EXPECT_NEAR(friction_cone(10.0 * terrain.normal, terrain).value, 5.0 - kConeSmoothing, 1e-12);
  const Vector3 tangent = terrain.normal.cross(Vector3::UnitY()).normalized();
  const Vector3 f = 4.0 * terrain.normal + 3.0 * tangent;
  EXPECT_NEAR(friction_cone(f, terrain).value, 2.0 - std::sqrt(9.0 + 1e-4), 1e-12);
}

TEST(FrictionCone, DerivativesMatchFiniteDifferences) {
  Terrain terrain;
  terrain.normal = Vector3(0.1, -0.3, 1.0).normalized();
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> f(-30.0, 30.0);
  const double h = 1e-5;
  for (int s = 0; s < 50; ++s) {
    const Vector3 lambda(f(rng), f(rng), std::abs(f(rng)));
    const ConeValue c = friction_cone(lambda, terrain);
    Vector3 grad;
    Matrix3 hess;
    for (int i = 0; i < 3; ++i) {
      Vector3 p = lambda, m = lambda;
      p(i) += h;
      m(i) -= h;
      grad(i) = (friction_cone(p, terrain).value - friction_cone(m, terrain).value) / (2.0 * h);
      hess.col(i) = (friction_cone(p, terrain).gradient - friction_cone(m, terrain).gradient) /
                    (2.0 * h);
    }
    EXPECT_LT(relative_gap(c.gradient, grad), 1e-6);
    EXPECT_LT(relative_gap(c.hessian, hess), 1e-6);
  }
}

TEST(FrictionCone, IsConcave) {
  const Terrain terrain;
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> f(-50.0, 50.0);
  for (int s = 0; s < 1000; ++s) {
    const Vector3 a(f(rng), f(rng), f(rng));
    const Vector3 b(f(rng), f(rng), f(rng));
    const double mid = friction_cone(0.5 * (a + b), terrain).value;
    const double avg = 0.5 * (friction_cone(a, terrain).value + friction_cone(b, terrain).value);
    EXPECT_GE(mid, avg - 1e-12);
  }
}

TEST(TimeGrid, ContainsEventsAndDropsCloseNodes) {
  const std::vector<double> grid = make_time_grid(1.0, 0.1, 0.015, {1.031, 1.05});
  EXPECT_DOUBLE_EQ(grid.front(), 1.0);
  EXPECT_DOUBLE_EQ(grid.back(), 1.1);
  EXPECT_NE(std::find(grid.begin(), grid.end(), 1.031), grid.end());
  EXPECT_NE(std::find(grid.begin(), grid.end(), 1.05), grid.end());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EXPECT_GT(grid[i] - grid[i - 1], 0.25 * 0.015 - 1e-12);
  }
  // 1.03 lies within dt / 4 of the event at 1.031.
  for (double t : grid) {
    EXPECT_GT(std::abs(t - 1.03), 1e-9);
  }
}

TEST(QuadrupedOcp, AllStanceStructure) {
  const auto ocp = standing_ocp(ModeSchedule::all_stance(0.0, 0.8), Vector3::Zero());
  const Vector x = ocp->initial_state();
  const Vector u = ocp->initial_input_guess(0);
  for (int k = 0; k < ocp->num_intervals(); ++k) {
    EXPECT_EQ(ocp->state_input_equalities(x, u, k, false).size(), 8);
    EXPECT_EQ(ocp->inequality_values(x, u, k).size(), 4);
    EXPECT_EQ(ocp->constraint_counts(k).equalities, 8);
  }
}

TEST(QuadrupedOcp, ConstraintCountsFollowPhases) {
  const ModeSchedule schedule(0.0, 0.8, {{0, 0.05, 0.35}, {3, 0.2, 0.5}, {1, 0.45, 0.75}});
  const auto ocp = standing_ocp(schedule, Vector3(0.5, 0.0, 0.0));
  const Vector x = ocp->initial_state();
  const Vector u = Vector::Constant(kInputDim, 1.0);
  for (int k = 0; k < ocp->num_intervals(); ++k) {
    const double t = ocp->time_grid()[k];
    // Brute-force flags from the swing intervals.
    int stance = 0;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      bool swinging = false;
      for (const auto& s : schedule.swings()) {
        swinging |= s.leg == leg && t >= s.liftoff - 1e-12 && t < s.touchdown - 1e-12;
      }
      stance += swinging ? 0 : 1;
      EXPECT_EQ(ocp->contact_flags(k)[leg], !swinging) << "t = " << t;
    }
    EXPECT_EQ(ocp->state_input_equalities(x, u, k, false).size(), 2 * stance + 4 * (4 - stance));
    EXPECT_EQ(ocp->inequality_values(x, u, k).size(), stance);
    EXPECT_EQ(static_cast<int>(ocp->inequalities(x, u, k).size()), stance);
  }
  for (double e : schedule.event_times()) {
    EXPECT_NE(std::find(ocp->time_grid().begin(), ocp->time_grid().end(), e),
              ocp->time_grid().end());
  }
}

TEST(QuadrupedOcp, TrotSwingLegsHaveNoConeRow) {
  const auto ocp = standing_ocp(trot_schedule(), Vector3(0.5, 0.0, 0.0));
  const Vector x = ocp->initial_state();
  const Vector u = ocp->initial_input_guess(0);
  int swing_nodes = 0;
  for (int k = 0; k < ocp->num_intervals(); ++k) {
    const ContactFlags flags = ocp->contact_flags(k);
    const int stance = static_cast<int>(std::count(flags.begin(), flags.end(), true));
    if (stance == 2) {
      ++swing_nodes;
      EXPECT_EQ(ocp->constraint_counts(k).equalities, 12);
      EXPECT_EQ(ocp->constraint_counts(k).inequalities, 2);
    }
  }
  EXPECT_GT(swing_nodes, 30);
}

TEST(QuadrupedOcp, ReferenceInputBalancesGravity) {
  const auto ocp = standing_ocp(ModeSchedule::all_stance(0.0, 0.8), Vector3::Zero());
  const RobotModel model;
  for (int k = 0; k < ocp->num_nodes(); k += 10) {
    const Vector xdot = srbd_derivative(model, Terrain{}, ocp->initial_state_guess(k),
                                        ocp->initial_input_guess(std::min(k, ocp->num_intervals() - 1)));
    EXPECT_LT(xdot.segment<6>(sx::kOmega).norm(), 1e-9);
  }
  const auto trot = standing_ocp(trot_schedule(), Vector3::Zero());
  const Vector u = trot->reference_input(0.2);
  EXPECT_EQ(u.segment<3>(ux::force(0)).norm(), 0.0);
  EXPECT_NEAR(u(ux::force(1) + 2), 0.5 * model.mass * model.gravity, 1e-9);
}

TEST(QuadrupedOcp, DerivativeCallbacksMatchFiniteDifferences) {
  const auto ocp = standing_ocp(trot_schedule(), Vector3(0.8, 0.1, 0.0));
  std::mt19937_64 rng(35);
  const double h = 1e-6;
  for (int s = 0; s < 20; ++s) {
    const Vector x = random_state(rng, RobotModel{});
    const Vector u = random_input(rng);
    const int node = static_cast<int>(rng() % ocp->num_intervals());

    const QuadraticModel cost = ocp->running_cost(x, u, node);
    const ConstraintLinearization eq = ocp->state_input_equalities(x, u, node, true);
    const std::vector<QuadraticModel> ineq = ocp->inequalities(x, u, node);
    Vector cost_gx(kStateDim), cost_gu(kInputDim);
    Matrix eq_dx(eq.size(), kStateDim), eq_du(eq.size(), kInputDim);
    Matrix in_du(ineq.size(), kInputDim);
    for (int i = 0; i < kStateDim; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      cost_gx(i) =
          (ocp->running_cost_value(xp, u, node) - ocp->running_cost_value(xm, u, node)) / (2.0 * h);
      eq_dx.col(i) = (ocp->state_input_equalities(xp, u, node, false).value -
                      ocp->state_input_equalities(xm, u, node, false).value) / (2.0 * h);
    }
    for (int i = 0; i < kInputDim; ++i) {
      Vector up = u, um = u;
      up(i) += h;
      um(i) -= h;
      cost_gu(i) =
          (ocp->running_cost_value(x, up, node) - ocp->running_cost_value(x, um, node)) / (2.0 * h);
      eq_du.col(i) = (ocp->state_input_equalities(x, up, node, false).value -
                      ocp->state_input_equalities(x, um, node, false).value) / (2.0 * h);
      in_du.col(i) =
          (ocp->inequality_values(x, up, node) - ocp->inequality_values(x, um, node)) / (2.0 * h);
    }
    Matrix in_du_analytic(ineq.size(), kInputDim);
    for (std::size_t j = 0; j < ineq.size(); ++j) {
      in_du_analytic.row(j) = ineq[j].du.transpose();
      EXPECT_NEAR(ineq[j].value, ocp->inequality_values(x, u, node)(j), 1e-12);
    }
    EXPECT_LT(relative_gap(cost.dx, cost_gx), 1e-5);
    EXPECT_LT(relative_gap(cost.du, cost_gu), 1e-5);
    EXPECT_LT(relative_gap(eq.dx, eq_dx), 1e-5);
    EXPECT_LT(relative_gap(eq.du, eq_du), 1e-5);
    EXPECT_LT(relative_gap(in_du_analytic, in_du), 1e-5);
  }
}

TEST(QuadrupedOcp, RejectsScheduleNotCoveringTheHorizon) {
  EXPECT_THROW(standing_ocp(ModeSchedule::all_stance(0.0, 0.5), Vector3::Zero(), 0.8), Error);
}

}  // namespace
}  // namespace wbmpc
