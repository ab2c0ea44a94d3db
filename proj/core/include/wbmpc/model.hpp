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

// Kinodynamic model of a wheeled quadruped: per-leg kinematics with the wheel
// treated as a locked joint, plus single-rigid-body dynamics of the torso.
//
// Conventions
//   theta = (roll, pitch, yaw), R_WB = Rz(yaw) * Ry(pitch) * Rx(roll)
//   omega and v are expressed in the torso frame
//   contact forces are expressed in the world frame
//   the contact point is the wheel center offset by one radius along -n

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "wbmpc/common.hpp"

namespace wbmpc {

struct RobotModel {
  double mass = 50.0;
  Matrix3 inertia = Eigen::Vector3d(0.9, 1.9, 2.1).asDiagonal();
  double gravity = 9.81;
  /// Hip joint positions relative to the COM, torso frame.
  std::array<Vector3, kNumLegs> hip_offsets = {Vector3(0.3, 0.2, 0.0), Vector3(0.3, -0.2, 0.0),
                                               Vector3(-0.3, 0.2, 0.0), Vector3(-0.3, -0.2, 0.0)};
  double thigh_length = 0.3125;
  double shank_length = 0.3125;
  double wheel_radius = 0.1;
  /// Symmetric limits for (HAA, HFE, KFE), rad.
  Vector3 joint_limits = Vector3(2.9, 4.0, 4.0);
  /// Nominal (HAA, HFE, KFE) for every leg, rad.
  Vector3 nominal_leg_joints = Vector3(0.0, 0.6, -1.2);
  /// Distance from pitch = +-pi/2 at which the Euler map is rejected.
  double pitch_margin = 1e-3;

  /// Rectangle hip layout, leg lengths split evenly between thigh and shank.
  static RobotModel with_geometry(double hip_length, double hip_width, double leg_length);

  /// Throws ConfigError when the parameters are not physical.
  void validate() const;

  Eigen::Matrix<double, kNumJoints, 1> nominal_joint_positions() const;
  bool within_joint_limits(const Eigen::Ref<const Vector>& q_joints) const;
};

/// Single plane {r : n . r = offset} with Coulomb friction.
struct Terrain {
  Vector3 normal = Vector3::UnitZ();
  double offset = 0.0;
  double friction = 0.7;

  void validate() const;
  /// Columns: two tangent directions and the normal.
  Matrix3 surface_frame() const;
  double height_above(const Vector3& point) const { return normal.dot(point) - offset; }
};

template <typename Scalar>
Mat3<Scalar> rot_x(const Scalar& a) {
  using std::cos, std::sin;
  Mat3<Scalar> r;
  const Scalar c = cos(a), s = sin(a);
  r << Scalar(1), Scalar(0), Scalar(0), Scalar(0), c, -s, Scalar(0), s, c;
  return r;
}

template <typename Scalar>
Mat3<Scalar> rot_y(const Scalar& a) {
  using std::cos, std::sin;
  Mat3<Scalar> r;
  const Scalar c = cos(a), s = sin(a);
  r << c, Scalar(0), s, Scalar(0), Scalar(1), Scalar(0), -s, Scalar(0), c;
  return r;
}

template <typename Scalar>
Mat3<Scalar> rot_z(const Scalar& a) {
  using std::cos, std::sin;
  Mat3<Scalar> r;
  const Scalar c = cos(a), s = sin(a);
  r << c, -s, Scalar(0), s, c, Scalar(0), Scalar(0), Scalar(0), Scalar(1);
  return r;
}

/// R_WB for Z-Y-X Euler angles stored as (roll, pitch, yaw).
template <typename Scalar>
Mat3<Scalar> rotation_from_euler(const Vec3<Scalar>& theta) {
  return rot_z(theta(2)) * rot_y(theta(1)) * rot_x(theta(0));
}

template <typename Scalar>
void check_pitch(const Vec3<Scalar>& theta, double margin) {
  if (std::abs(value_of(theta(1))) > M_PI / 2.0 - margin) {
    throw SingularityError("Euler pitch within " + std::to_string(margin) + " rad of +-pi/2");
  }
}

/// T(theta) with theta_dot = T(theta) * omega, omega in the torso frame.
template <typename Scalar>
Mat3<Scalar> euler_rate_matrix(const Vec3<Scalar>& theta, double margin = 1e-3) {
  using std::cos, std::sin;
  check_pitch(theta, margin);
  const Scalar sr = sin(theta(0)), cr = cos(theta(0));
  const Scalar cp = cos(theta(1)), tp = sin(theta(1)) / cp;
  Mat3<Scalar> t;
  t << Scalar(1), sr * tp, cr * tp,  //
      Scalar(0), cr, -sr,            //
      Scalar(0), sr / cp, cr / cp;
  return t;
}

template <typename Scalar>
Vec3<Scalar> euler_rate_transform(const Vec3<Scalar>& theta, const Vec3<Scalar>& omega,
                                  double margin = 1e-3) {
  return euler_rate_matrix(theta, margin) * omega;
}

template <typename Scalar>
Mat3<Scalar> skew(const Vec3<Scalar>& a) {
  Mat3<Scalar> s;
  s << Scalar(0), -a(2), a(1), a(2), Scalar(0), -a(0), -a(1), a(0), Scalar(0);
  return s;
}

/// Leg chain in the torso frame: hip -> HAA(x) -> HFE(y) -> thigh -> KFE(y) -> shank -> wheel axle.
template <typename Scalar>
struct LegChain {
  Vec3<Scalar> wheel_center;  // torso frame, relative to COM
  Vec3<Scalar> axle;          // torso frame, unit
  Mat3<Scalar> jacobian;      // d(wheel_center)/d(q_leg), torso frame
};

template <typename Scalar>
LegChain<Scalar> leg_chain(const RobotModel& model, int leg, const Vec3<Scalar>& q_leg) {
  const Vec3<Scalar> hip = model.hip_offsets[leg].template cast<Scalar>();
  const Mat3<Scalar> r_haa = rot_x(q_leg(0));
  const Mat3<Scalar> r_hfe = r_haa * rot_y(q_leg(1));
  const Mat3<Scalar> r_kfe = r_hfe * rot_y(q_leg(2));
  const Vec3<Scalar> thigh = r_hfe * Vec3<Scalar>(Scalar(0), Scalar(0), Scalar(-model.thigh_length));
  const Vec3<Scalar> shank = r_kfe * Vec3<Scalar>(Scalar(0), Scalar(0), Scalar(-model.shank_length));

  LegChain<Scalar> out;
  out.wheel_center = hip + thigh + shank;
  const Vec3<Scalar> x_axis(Scalar(1), Scalar(0), Scalar(0));
  const Vec3<Scalar> y_axis = r_haa * Vec3<Scalar>(Scalar(0), Scalar(1), Scalar(0));
  out.axle = y_axis;
  // Revolute joints: column = axis x (end - joint origin).
  out.jacobian.col(0) = x_axis.cross(thigh + shank);
  out.jacobian.col(1) = y_axis.cross(thigh + shank);
  out.jacobian.col(2) = y_axis.cross(shank);
  return out;
}

template <typename Scalar>
struct ContactKinematics {
  Vec3<Scalar> position;     // contact point, world frame
  Vec3<Scalar> relative;     // contact point minus COM, world frame
  Vec3<Scalar> wheel_body;   // wheel center relative to COM, torso frame
  Vec3<Scalar> rolling_dir;  // unit, orthogonal to n
  Vec3<Scalar> lateral_dir;  // n x rolling_dir
  Mat3<Scalar> leg_jacobian_world;  // R_WB * d(wheel_center)/d(q_leg)
};

template <typename Scalar>
ContactKinematics<Scalar> contact_kinematics(const RobotModel& model, const Terrain& terrain,
                                             const Mat3<Scalar>& r_wb, const Vec3<Scalar>& p,
                                             const Vec3<Scalar>& q_leg, int leg) {
  const LegChain<Scalar> chain = leg_chain(model, leg, q_leg);
  const Vec3<Scalar> n = terrain.normal.cast<Scalar>();
  ContactKinematics<Scalar> c;
  c.wheel_body = chain.wheel_center;
  c.relative = r_wb * chain.wheel_center - Scalar(model.wheel_radius) * n;
  c.position = p + c.relative;
  const Vec3<Scalar> roll = (r_wb * chain.axle).cross(n);
  c.rolling_dir = roll / roll.norm();
  c.lateral_dir = n.cross(c.rolling_dir);
  c.leg_jacobian_world = r_wb * chain.jacobian;
  return c;
}

template <typename Scalar>
Vec3<Scalar> leg_joints(const VecX<Scalar>& x, int leg) {
  return x.template segment<3>(sx::kJoints + kJointsPerLeg * leg);
}

/// Contact kinematics of all legs at state x.
template <typename Scalar>
std::array<ContactKinematics<Scalar>, kNumLegs> forward_kinematics(const RobotModel& model,
                                                                   const Terrain& terrain,
                                                                   const VecX<Scalar>& x) {
  const Vec3<Scalar> theta = x.template segment<3>(sx::kTheta);
  const Vec3<Scalar> p = x.template segment<3>(sx::kPos);
  const Mat3<Scalar> r_wb = rotation_from_euler(theta);
  std::array<ContactKinematics<Scalar>, kNumLegs> out;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    out[leg] = contact_kinematics(model, terrain, r_wb, p, leg_joints(x, leg), leg);
  }
  return out;
}

/// World velocity of a contact point: R_WB (v + omega x wheel + J_leg q_dot_leg).
template <typename Scalar>
Vec3<Scalar> contact_velocity(const Mat3<Scalar>& r_wb, const ContactKinematics<Scalar>& c,
                              const Vec3<Scalar>& omega, const Vec3<Scalar>& v,
                              const Vec3<Scalar>& q_dot_leg) {
  return r_wb * (v + omega.cross(c.wheel_body)) + c.leg_jacobian_world * q_dot_leg;
}

/// Single-rigid-body state derivative with per-leg kinematics.
///   theta_dot = T(theta) omega
///   p_dot     = R_WB v
///   omega_dot = I^-1 (-omega x I omega + sum R^T (r_Ei x lambda_i))
///   v_dot     = R^T g_W + R^T sum(lambda_i) / m - omega x v
///   q_dot     = u_j
template <typename Scalar>
VecX<Scalar> srbd_derivative(const RobotModel& model, const Terrain& terrain, const VecX<Scalar>& x,
                             const VecX<Scalar>& u) {
  const Vec3<Scalar> theta = x.template segment<3>(sx::kTheta);
  const Vec3<Scalar> omega = x.template segment<3>(sx::kOmega);
  const Vec3<Scalar> v = x.template segment<3>(sx::kVel);
  const Mat3<Scalar> r_wb = rotation_from_euler(theta);
  const Mat3<Scalar> inertia = model.inertia.cast<Scalar>();
  const Mat3<Scalar> inertia_inv = model.inertia.inverse().cast<Scalar>();

  Vec3<Scalar> force_sum = Vec3<Scalar>::Zero();
  Vec3<Scalar> torque_sum = Vec3<Scalar>::Zero();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3<Scalar> lambda = u.template segment<3>(ux::force(leg));
    const LegChain<Scalar> chain = leg_chain(model, leg, leg_joints(x, leg));
    const Vec3<Scalar> r =
        r_wb * chain.wheel_center - Scalar(model.wheel_radius) * terrain.normal.cast<Scalar>();
    force_sum += lambda;
    torque_sum += r.cross(lambda);
  }
  const Vec3<Scalar> gravity_world(Scalar(0), Scalar(0), Scalar(-model.gravity));

  VecX<Scalar> xdot(kStateDim);
  xdot.template segment<3>(sx::kTheta) = euler_rate_transform(theta, omega, model.pitch_margin);
  xdot.template segment<3>(sx::kPos) = r_wb * v;
  xdot.template segment<3>(sx::kOmega) =
      inertia_inv * (-omega.cross(inertia * omega) + r_wb.transpose() * torque_sum);
  xdot.template segment<3>(sx::kVel) = r_wb.transpose() * (gravity_world + force_sum / Scalar(model.mass)) -
                                       omega.cross(v);
  xdot.template segment<kNumJoints>(sx::kJoints) = u.template segment<kNumJoints>(ux::kJointVel);
  return xdot;
}

// Double-precision entry points.

Vector3 euler_rate_transform(const Vector3& theta, const Vector3& omega, double margin = 1e-3);

std::array<ContactKinematics<double>, kNumLegs> forward_kinematics(const RobotModel& model,
                                                                   const Terrain& terrain,
                                                                   const Vector& x);

/// 3 x 18 map from the generalized velocity (omega, v, u_j) to the world
/// velocity of the contact point of `leg`.
Eigen::Matrix<double, 3, 18> contact_jacobian(const RobotModel& model, const Terrain& terrain,
                                              const Vector& x, int leg);

Vector srbd_derivative(const RobotModel& model, const Terrain& terrain, const Vector& x,
                       const Vector& u);

struct DynamicsJacobians {
  Matrix state;  // d f / d x
  Matrix input;  // d f / d u
};

/// Exact first derivatives of srbd_derivative by forward-mode differentiation.
DynamicsJacobians srbd_jacobians(const RobotModel& model, const Terrain& terrain, const Vector& x,
                                 const Vector& u);

/// Standing state on the terrain at the nominal joint configuration.
Vector nominal_stance_state(const RobotModel& model, const Terrain& terrain,
                            const Vector3& xy = Vector3::Zero(), double yaw = 0.0);

/// Equal vertical support forces on the stance legs, zero joint velocity.
Vector gravity_compensating_input(const RobotModel& model, const std::array<bool, kNumLegs>& stance);

}  // namespace wbmpc
