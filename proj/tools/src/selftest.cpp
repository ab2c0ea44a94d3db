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

#include "wbmpc_cli/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "wbmpc/gait.hpp"
#include "wbmpc/model.hpp"
#include "wbmpc/solver.hpp"
#include "wbmpc_cli/oracles.hpp"

namespace wbmpc::cli {

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

// max_ij |a - b| / (1 + |b|)
double relative_gap(const Matrix& a, const Matrix& b) {
  return ((a - b).array().abs() / (1.0 + b.array().abs())).maxCoeff();
}

Vector random_state(std::mt19937_64& rng, const RobotModel& model) {
  std::uniform_real_distribution<double> ang(-0.4, 0.4);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::uniform_real_distribution<double> jnt(-0.3, 0.3);
  Vector x = nominal_stance_state(model, Terrain{});
  for (int i = 0; i < 3; ++i) {
    x(sx::kTheta + i) = ang(rng);
    x(sx::kPos + i) += vel(rng);
    x(sx::kOmega + i) = vel(rng);
    x(sx::kVel + i) = vel(rng);
  }
  for (int j = 0; j < kNumJoints; ++j) {
    x(sx::kJoints + j) += jnt(rng);
  }
  return x;
}

Vector random_input(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> f(-40.0, 40.0);
  std::uniform_real_distribution<double> fz(50.0, 200.0);
  std::uniform_real_distribution<double> qd(-1.0, 1.0);
  Vector u(kInputDim);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    u.segment<3>(ux::force(leg)) = Vector3(f(rng), f(rng), fz(rng));
  }
  for (int j = 0; j < kNumJoints; ++j) {
    u(ux::kJointVel + j) = qd(rng);
  }
  return u;
}

SelftestOutcome riccati_equivalence(const SelftestOptions&) {
  const LinearQuadraticOcp ocp = double_integrator_problem(2.0, 0.015);
  SolverSettings settings;
  settings.max_iterations = 5;
  const SolveResult res = slq_solve(ocp, nullptr, settings);
  const int steps = ocp.num_intervals();
  const double dt = ocp.interval(0);
  const double ref = discrete_lqr_cost(zoh_discretize(ocp.a(), ocp.b(), dt), ocp.q(), ocp.r(),
                                       ocp.qf(), ocp.initial_state(), steps, dt);
  const double rel = std::abs(res.cost - ref) / std::abs(ref);
  return {rel < 1e-6, fmt("slq cost %.9g vs Riccati %.9g", res.cost, ref)};
}

SelftestOutcome dynamics_jacobian(const SelftestOptions& opt) {
  const RobotModel model;
  RobotModel reference = model;
  reference.gravity *= opt.reference_gravity_scale;
  const Terrain terrain;
  std::mt19937_64 rng(11);
  const double h = 1e-6;
  double worst = 0.0;
  for (int s = 0; s < opt.derivative_samples; ++s) {
    const Vector x = random_state(rng, model);
    const Vector u = random_input(rng);
    const DynamicsJacobians jac = srbd_jacobians(model, terrain, x, u);
    Matrix fd_x(kStateDim, kStateDim), fd_u(kStateDim, kInputDim);
    for (int i = 0; i < kStateDim; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      fd_x.col(i) = (srbd_derivative(reference, terrain, xp, u) -
                     srbd_derivative(reference, terrain, xm, u)) / (2.0 * h);
    }
    for (int i = 0; i < kInputDim; ++i) {
      Vector up = u, um = u;
      up(i) += h;
      um(i) -= h;
      fd_u.col(i) = (srbd_derivative(reference, terrain, x, up) -
                     srbd_derivative(reference, terrain, x, um)) / (2.0 * h);
    }
    worst = std::max({worst, relative_gap(jac.state, fd_x), relative_gap(jac.input, fd_u)});
  }
  return {worst < 1e-5, fmt("max relative gap %.3g over %.0f samples", worst,
                            static_cast<double>(opt.derivative_samples))};
}

SelftestOutcome contact_jacobian_check(const SelftestOptions& opt) {
  const RobotModel model;
  const Terrain terrain;
  std::mt19937_64 rng(12);
  const double h = 1e-6;
  double worst = 0.0;
  for (int s = 0; s < opt.derivative_samples; ++s) {
    const Vector x = random_state(rng, model);
    const Vector u = random_input(rng);
    // Kinematic part of the state derivative: theta, p and the joints move.
    Vector xdot = Vector::Zero(kStateDim);
    const Vector3 theta = x.segment<3>(sx::kTheta);
    xdot.segment<3>(sx::kTheta) = euler_rate_transform(theta, Vector3(x.segment<3>(sx::kOmega)));
    xdot.segment<3>(sx::kPos) = rotation_from_euler<double>(theta) * x.segment<3>(sx::kVel);
    xdot.segment<kNumJoints>(sx::kJoints) = u.segment<kNumJoints>(ux::kJointVel);
    const auto plus = forward_kinematics(model, terrain, Vector(x + h * xdot));
    const auto minus = forward_kinematics(model, terrain, Vector(x - h * xdot));
    for (int leg = 0; leg < kNumLegs; ++leg) {
      Eigen::Matrix<double, 18, 1> gv;
      gv << x.segment<3>(sx::kOmega), x.segment<3>(sx::kVel), u.segment<kNumJoints>(ux::kJointVel);
      const Vector3 v = contact_jacobian(model, terrain, x, leg) * gv;
      const Vector3 fd = (plus[leg].position - minus[leg].position) / (2.0 * h);
      worst = std::max(worst, relative_gap(v, fd));
    }
  }
  return {worst < 1e-5, fmt("max relative gap %.3g", worst)};
}

SelftestOutcome barrier_junction(const SelftestOptions&) {
  const double mu = 0.1, delta = 5.0, eps = 1e-7;
  const BarrierValue lo = relaxed_log_barrier(delta - eps, mu, delta);
  const BarrierValue hi = relaxed_log_barrier(delta + eps, mu, delta);
  const double gap = std::max({std::abs(lo.value - hi.value), std::abs(lo.d1 - hi.d1),
                               std::abs(lo.d2 - hi.d2)});
  const BarrierValue at = relaxed_log_barrier(delta, mu, delta);
  const bool matches_log = std::abs(at.value + mu * std::log(delta)) < 1e-12 &&
                           std::abs(at.d1 + mu / delta) < 1e-12 &&
                           std::abs(at.d2 - mu / (delta * delta)) < 1e-12;
  return {gap < 1e-6 && matches_log, fmt("max jump across the junction %.3g", gap)};
}

// Pure lateral drift with the wheels rolling along x: the lateral error grows
// as v t, so the utility reaches u_bar at t* = (1 - u_bar) lambda_perp / v.
SelftestOutcome gait_crossing(const SelftestOptions&) {
  const GaitConfig cfg;
  const RobotModel model;
  const Terrain terrain;
  const Vector x = nominal_stance_state(model, terrain);
  const auto contacts = forward_kinematics(model, terrain, x);
  GaitState state;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    LegGaitState& ls = state.legs[leg];
    ls.contact_position = contacts[leg].position;
    ls.rolling_dir = Vector3::UnitX();
    ls.touchdown_offset = contacts[leg].position - x.segment<3>(sx::kPos);
    ls.nominal_offset = ls.touchdown_offset;
  }
  const double v = 0.2, horizon = 0.8;
  const ReferenceTrajectory ref = ReferenceTrajectory::integrate(
      x.segment<3>(sx::kPos), 0.0, 0.0, horizon, 0.005, [&](double) {
        return VelocityCommand{Vector3(0.0, v, 0.0), 0.0};
      });
  const ModeSchedule schedule = generate_gait(cfg, state, ModeSchedule::all_stance(0.0, horizon),
                                              ref, horizon);
  const double t_star = (1.0 - cfg.u_bar) * cfg.lambda_perp / v;
  const double expected = std::ceil(t_star / cfg.dt_grid - 1e-9) * cfg.dt_grid;
  double first = std::numeric_limits<double>::infinity();
  for (const auto& s : schedule.swings()) {
    first = std::min(first, s.liftoff);
  }
  return {std::abs(first - expected) < 1e-9, fmt("first lift-off %.4f s, expected %.4f s", first,
                                                 expected)};
}

}  // namespace

std::vector<Selftest> default_selftests() {
  return {
      {"riccati_equivalence", riccati_equivalence},
      {"dynamics_jacobian_fd", dynamics_jacobian},
      {"contact_jacobian_fd", contact_jacobian_check},
      {"barrier_junction", barrier_junction},
      {"gait_threshold_crossing", gait_crossing},
  };
}

int run_selftests(const std::vector<Selftest>& tests, const SelftestOptions& options,
                  std::ostream& os) {
  if (tests.empty()) {
    os << "FAIL selftest registry is empty\n";
    return -1;
  }
  int failures = 0;
  for (const Selftest& t : tests) {
    SelftestOutcome out;
    try {
      out = t.run(options);
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    os << (out.passed ? "PASS " : "FAIL ") << t.name << "  " << out.detail << '\n';
    failures += out.passed ? 0 : 1;
  }
  os << (failures == 0 ? "all " + std::to_string(tests.size()) + " checks passed"
                       : std::to_string(failures) + " of " + std::to_string(tests.size()) +
                             " checks failed")
     << '\n';
  return failures;
}

}  // namespace wbmpc::cli
