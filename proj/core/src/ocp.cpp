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

#include "wbmpc/ocp.hpp"

#include <algorithm>
#include <cmath>

#include "wbmpc/autodiff.hpp"

namespace wbmpc {

Vector CostConfig::default_state_weights() {
  Vector q(kStateDim);
  q.segment<3>(sx::kTheta).setConstant(100.0);
  q.segment<3>(sx::kPos).setConstant(200.0);
  q.segment<3>(sx::kOmega).setConstant(5.0);
  q.segment<3>(sx::kVel).setConstant(10.0);
  q.segment<kNumJoints>(sx::kJoints).setConstant(2.0);
  return q;
}

Vector CostConfig::default_input_weights() {
  Vector r(kInputDim);
  r.head<3 * kNumLegs>().setConstant(1e-3);
  r.segment<kNumJoints>(ux::kJointVel).setConstant(0.1);
  return r;
}

void CostConfig::validate() const {
  if (q_diag.size() != kStateDim || r_diag.size() != kInputDim) {
    throw ConfigError("cost weights have the wrong dimension");
  }
  if ((q_diag.array() < 0.0).any() || !q_diag.allFinite()) {
    throw ConfigError("cost.Q must be positive semi-definite");
  }
  if ((r_diag.array() <= 0.0).any() || !r_diag.allFinite()) {
    throw ConfigError("cost.R must be positive definite");
  }
  if (!(terminal_scale >= 0.0)) {
    throw ConfigError("cost.terminal_scale must be non-negative");
  }
}

void SwingProfile::validate() const {
  if (!(apex_height >= 0.0)) {
    throw ConfigError("swing.apex_height must be non-negative");
  }
}

double SwingProfile::height(double phase) const {
  if (phase <= 0.0 || phase >= 1.0) {
    return 0.0;
  }
  const double a = phase * (1.0 - phase);
  return apex_height * 64.0 * a * a * a;
}

double SwingProfile::velocity(double t, double liftoff, double duration) const {
  const double s = (t - liftoff) / duration;
  if (s <= 0.0 || s >= 1.0) {
    return 0.0;
  }
  // d/ds [s(1-s)]^3 = 3 [s(1-s)]^2 (1 - 2s)
  const double a = s * (1.0 - s);
  return apex_height * 64.0 * 3.0 * a * a * (1.0 - 2.0 * s) / duration;
}

QuadraticModel tracking_cost(const Vector& q_diag, const Vector& r_diag, const Vector& x,
                             const Vector& u, const Vector& x_ref, const Vector& u_ref) {
  const Vector dx = x - x_ref;
  const Vector du = u - u_ref;
  QuadraticModel m;
  m.dx = q_diag.cwiseProduct(dx);
  m.du = r_diag.cwiseProduct(du);
  m.value = 0.5 * (dx.dot(m.dx) + du.dot(m.du));
  m.dxx = q_diag.asDiagonal();
  m.duu = r_diag.asDiagonal();
  m.dux = Matrix::Zero(u.size(), x.size());
  return m;
}

ConeValue friction_cone(const Vector3& lambda, const Terrain& terrain, double smoothing) {
  const Matrix3 frame = terrain.surface_frame();
  const Vector3 f = frame.transpose() * lambda;
  const double s = std::sqrt(f.x() * f.x() + f.y() * f.y() + smoothing * smoothing);
  ConeValue out;
  out.value = terrain.friction * f.z() - s;
  const Vector3 grad_f(-f.x() / s, -f.y() / s, terrain.friction);
  Matrix3 hess_f = Matrix3::Zero();
  const Eigen::Vector2d t = f.head<2>();
  hess_f.topLeftCorner<2, 2>() = -(Eigen::Matrix2d::Identity() - t * t.transpose() / (s * s)) / s;
  out.gradient = frame * grad_f;
  out.hessian = frame * hess_f * frame.transpose();
  return out;
}

Eigen::Vector2d stance_constraints(const RobotModel& model, const Terrain& terrain, const Vector& x,
                                   const Vector& u, int leg) {
  return stance_residual<double>(model, terrain, x, u, leg);
}

Eigen::Vector4d swing_constraints(const RobotModel& model, const Terrain& terrain,
                                  const SwingProfile& profile, const ModeSchedule::Swing& swing,
                                  const Vector& x, const Vector& u, int leg, double t) {
  const double c = profile.velocity(t, swing.liftoff, swing.touchdown - swing.liftoff);
  return swing_residual<double>(model, terrain, x, u, leg, c);
}

namespace {

struct LegRows {
  bool stance = true;
  double normal_velocity_ref = 0.0;
};

std::array<LegRows, kNumLegs> leg_rows(const SwingProfile& profile, const ModeSchedule& schedule,
                                       const ContactFlags& flags, double t) {
  std::array<LegRows, kNumLegs> rows;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    rows[leg].stance = flags[leg];
    if (!flags[leg]) {
      if (const auto swing = schedule.swing_at(leg, t)) {
        rows[leg].normal_velocity_ref =
            profile.velocity(t, swing->liftoff, swing->touchdown - swing->liftoff);
      }
    }
  }
  return rows;
}

int row_count(const std::array<LegRows, kNumLegs>& rows) {
  int n = 0;
  for (const LegRows& r : rows) {
    n += r.stance ? 2 : 4;
  }
  return n;
}

template <typename Scalar>
VecX<Scalar> stacked_residual(const RobotModel& model, const Terrain& terrain,
                              const std::array<LegRows, kNumLegs>& rows, const VecX<Scalar>& x,
                              const VecX<Scalar>& u) {
  VecX<Scalar> g(row_count(rows));
  int r = 0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (rows[leg].stance) {
      g.template segment<2>(r) = stance_residual<Scalar>(model, terrain, x, u, leg);
      r += 2;
    } else {
      g.template segment<4>(r) =
          swing_residual<Scalar>(model, terrain, x, u, leg, rows[leg].normal_velocity_ref);
      r += 4;
    }
  }
  return g;
}

ConstraintLinearization equalities_for(const RobotModel& model, const Terrain& terrain,
                                       const std::array<LegRows, kNumLegs>& rows, const Vector& x,
                                       const Vector& u, bool with_state_derivative) {
  if (with_state_derivative) {
    FunctionLinearization lin = linearize(x, u, [&](const VecX<Dual>& xd, const VecX<Dual>& ud) {
      return stacked_residual<Dual>(model, terrain, rows, xd, ud);
    });
    return {std::move(lin.value), std::move(lin.dx), std::move(lin.du)};
  }
  // Residuals are affine in u: fill the input Jacobian from the kinematics.
  ConstraintLinearization eq;
  eq.value = stacked_residual<double>(model, terrain, rows, x, u);
  eq.dx = Matrix(0, 0);
  eq.du = Matrix::Zero(eq.value.size(), u.size());
  const auto contacts = forward_kinematics(model, terrain, x);
  int r = 0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Matrix3& j = contacts[leg].leg_jacobian_world;
    const int col = ux::joint_vel(leg);
    if (rows[leg].stance) {
      eq.du.block<1, 3>(r, col) = contacts[leg].lateral_dir.transpose() * j;
      eq.du.block<1, 3>(r + 1, col) = terrain.normal.transpose() * j;
      r += 2;
    } else {
      eq.du.block<3, 3>(r, ux::force(leg)).setIdentity();
      eq.du.block<1, 3>(r + 3, col) = terrain.normal.transpose() * j;
      r += 4;
    }
  }
  return eq;
}

}  // namespace

ConstraintLinearization mode_constraints(const RobotModel& model, const Terrain& terrain,
                                         const SwingProfile& profile, const ModeSchedule& schedule,
                                         const Vector& x, const Vector& u, double t,
                                         bool with_state_derivative) {
  const auto rows = leg_rows(profile, schedule, schedule.contact_flags_at(t), t);
  return equalities_for(model, terrain, rows, x, u, with_state_derivative);
}

std::vector<double> make_time_grid(double t0, double horizon, double dt,
                                   const std::vector<double>& events) {
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw Error("make_time_grid: horizon and dt must be positive");
  }
  const double t_end = t0 + horizon;
  std::vector<double> fixed{t0, t_end};
  for (double e : events) {
    if (e > t0 && e < t_end) {
      fixed.push_back(e);
    }
  }
  std::sort(fixed.begin(), fixed.end());
  std::vector<double> grid = fixed;
  const double min_gap = 0.25 * dt;
  for (int j = 1;; ++j) {
    const double t = t0 + j * dt;
    if (t >= t_end - 1e-12) {
      break;
    }
    const auto it = std::lower_bound(fixed.begin(), fixed.end(), t);
    const bool near_next = it != fixed.end() && *it - t < min_gap;
    const bool near_prev = it != fixed.begin() && t - *(it - 1) < min_gap;
    if (!near_next && !near_prev) {
      grid.push_back(t);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             grid.end());
  return grid;
}

QuadrupedOcp::QuadrupedOcp(RobotModel model, Terrain terrain, ModeSchedule schedule,
                           ReferenceTrajectory ref, CostConfig cost, SwingProfile swing, Vector x0,
                           double horizon, double dt)
    : model_(std::move(model)),
      terrain_(std::move(terrain)),
      schedule_(std::move(schedule)),
      ref_(std::move(ref)),
      cost_(std::move(cost)),
      swing_(swing),
      x0_(std::move(x0)),
      dynamics_(model_, terrain_) {
  cost_.validate();
  swing_.validate();
  if (x0_.size() != kStateDim) {
    throw Error("QuadrupedOcp: initial state has the wrong dimension");
  }
  const double t0 = schedule_.start();
  if (std::abs(schedule_.end() - (t0 + horizon)) > 1e-9) {
    throw Error("QuadrupedOcp: mode schedule does not cover the horizon");
  }
  grid_ = make_time_grid(t0, horizon, dt, schedule_.event_times());
  for (double t : grid_) {
    flags_.push_back(schedule_.contact_flags_at(t));
    x_ref_.push_back(reference_state(t));
    u_ref_.push_back(reference_input(t));
  }
}

Vector QuadrupedOcp::reference_state(double t) const {
  const ReferenceSample r = ref_.at(t);
  Vector x = Vector::Zero(kStateDim);
  x(sx::kTheta + 2) = r.yaw;
  x.segment<3>(sx::kPos) = r.position;
  x(sx::kOmega + 2) = r.yaw_rate;
  x.segment<3>(sx::kVel) = rot_z<double>(r.yaw).transpose() * r.velocity;
  x.segment<kNumJoints>(sx::kJoints) = model_.nominal_joint_positions();
  return x;
}

Vector QuadrupedOcp::reference_input(double t) const {
  return gravity_compensating_input(model_, schedule_.contact_flags_at(t));
}

QuadraticModel QuadrupedOcp::running_cost(const Vector& x, const Vector& u, int node) const {
  return tracking_cost(cost_.q_diag, cost_.r_diag, x, u, x_ref_[node], u_ref_[node]);
}

double QuadrupedOcp::running_cost_value(const Vector& x, const Vector& u, int node) const {
  const Vector dx = x - x_ref_[node];
  const Vector du = u - u_ref_[node];
  return 0.5 * (dx.dot(cost_.q_diag.cwiseProduct(dx)) + du.dot(cost_.r_diag.cwiseProduct(du)));
}

QuadraticModel QuadrupedOcp::running_cost_at(const Vector& x, const Vector& u, double t) const {
  return tracking_cost(cost_.q_diag, cost_.r_diag, x, u, reference_state(t), reference_input(t));
}

QuadraticModel QuadrupedOcp::terminal_cost(const Vector& x) const {
  const Vector qf = cost_.terminal_scale * cost_.q_diag;
  QuadraticModel m = tracking_cost(qf, Vector::Ones(0), x, Vector(0), x_ref_.back(), Vector(0));
  return m;
}

ConstraintLinearization QuadrupedOcp::state_input_equalities(const Vector& x, const Vector& u,
                                                             int node,
                                                             bool with_state_derivative) const {
  const auto rows = leg_rows(swing_, schedule_, flags_[node], grid_[node]);
  return equalities_for(model_, terrain_, rows, x, u, with_state_derivative);
}

std::vector<QuadraticModel> QuadrupedOcp::inequalities(const Vector& x, const Vector& u,
                                                       int node) const {
  std::vector<QuadraticModel> out;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (!flags_[node][leg]) {
      continue;
    }
    const ConeValue cone = friction_cone(u.segment<3>(ux::force(leg)), terrain_);
    QuadraticModel h = QuadraticModel::zero(static_cast<int>(x.size()), static_cast<int>(u.size()));
    h.value = cone.value;
    h.du.segment<3>(ux::force(leg)) = cone.gradient;
    h.duu.block<3, 3>(ux::force(leg), ux::force(leg)) = cone.hessian;
    out.push_back(std::move(h));
  }
  return out;
}

Vector QuadrupedOcp::inequality_values(const Vector& /*x*/, const Vector& u, int node) const {
  std::vector<double> values;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (flags_[node][leg]) {
      values.push_back(friction_cone(u.segment<3>(ux::force(leg)), terrain_).value);
    }
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

ConstraintCounts QuadrupedOcp::constraint_counts(int node) const {
  ConstraintCounts c;
  for (bool stance : flags_[node]) {
    c.equalities += stance ? 2 : 4;
    c.inequalities += stance ? 1 : 0;
  }
  return c;
}

std::unique_ptr<QuadrupedOcp> assemble_ocp(const RobotModel& model, const Terrain& terrain,
                                           const ModeSchedule& schedule,
                                           const ReferenceTrajectory& ref, const CostConfig& cost,
                                           const SwingProfile& swing, const Vector& x0,
                                           double horizon, double dt) {
  return std::make_unique<QuadrupedOcp>(model, terrain, schedule, ref, cost, swing, x0, horizon, dt);
}

}  // namespace wbmpc
