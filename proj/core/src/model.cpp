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

#include "wbmpc/model.hpp"

#include <algorithm>
#include <limits>

#include "wbmpc/autodiff.hpp"

namespace wbmpc {

RobotModel RobotModel::with_geometry(double hip_length, double hip_width, double leg_length) {
  RobotModel model;
  const double hx = 0.5 * hip_length, hy = 0.5 * hip_width;
  model.hip_offsets = {Vector3(hx, hy, 0.0), Vector3(hx, -hy, 0.0), Vector3(-hx, hy, 0.0),
                       Vector3(-hx, -hy, 0.0)};
  model.thigh_length = 0.5 * leg_length;
  model.shank_length = 0.5 * leg_length;
  return model;
}

void RobotModel::validate() const {
  if (!(mass > 0.0)) {
    throw ConfigError("robot.mass must be positive");
  }
  if (!inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw ConfigError("robot.inertia must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(inertia);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw ConfigError("robot.inertia must be positive definite");
  }
  if (!(thigh_length > 0.0) || !(shank_length > 0.0) || !(wheel_radius > 0.0)) {
    throw ConfigError("robot link lengths and wheel radius must be positive");
  }
  if ((joint_limits.array() <= 0.0).any()) {
    throw ConfigError("robot.joint_limits must be positive");
  }
  if (!(gravity > 0.0)) {
    throw ConfigError("robot.gravity must be positive");
  }
}

Eigen::Matrix<double, kNumJoints, 1> RobotModel::nominal_joint_positions() const {
  Eigen::Matrix<double, kNumJoints, 1> q;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    q.segment<3>(kJointsPerLeg * leg) = nominal_leg_joints;
  }
  return q;
}

bool RobotModel::within_joint_limits(const Eigen::Ref<const Vector>& q_joints) const {
  for (int j = 0; j < kNumJoints; ++j) {
    if (std::abs(q_joints(j)) > joint_limits(j % kJointsPerLeg)) {
      return false;
    }
  }
  return true;
}

void Terrain::validate() const {
  if (std::abs(normal.norm() - 1.0) > 1e-9) {
    throw ConfigError("terrain.normal must be a unit vector");
  }
  if (!(friction > 0.0)) {
    throw ConfigError("terrain.friction must be positive");
  }
}

Matrix3 Terrain::surface_frame() const {
  // First tangent: world x projected onto the plane (world y if x is parallel to n).
  Vector3 t1 = Vector3::UnitX() - normal * normal.x();
  if (t1.norm() < 1e-6) {
    t1 = Vector3::UnitY() - normal * normal.y();
  }
  t1.normalize();
  Matrix3 frame;
  frame.col(0) = t1;
  frame.col(1) = normal.cross(t1);
  frame.col(2) = normal;
  return frame;
}

Vector3 euler_rate_transform(const Vector3& theta, const Vector3& omega, double margin) {
  return euler_rate_transform<double>(theta, omega, margin);
}

std::array<ContactKinematics<double>, kNumLegs> forward_kinematics(const RobotModel& model,
                                                                   const Terrain& terrain,
                                                                   const Vector& x) {
  return forward_kinematics<double>(model, terrain, x);
}

Eigen::Matrix<double, 3, 18> contact_jacobian(const RobotModel& model, const Terrain& terrain,
                                              const Vector& x, int leg) {
  const Matrix3 r_wb = rotation_from_euler<double>(x.segment<3>(sx::kTheta));
  const ContactKinematics<double> c = contact_kinematics<double>(
      model, terrain, r_wb, x.segment<3>(sx::kPos), leg_joints<double>(x, leg), leg);
  Eigen::Matrix<double, 3, 18> jac = Eigen::Matrix<double, 3, 18>::Zero();
  jac.block<3, 3>(0, 0) = -r_wb * skew<double>(c.wheel_body);
  jac.block<3, 3>(0, 3) = r_wb;
  jac.block<3, 3>(0, 6 + kJointsPerLeg * leg) = c.leg_jacobian_world;
  return jac;
}

Vector srbd_derivative(const RobotModel& model, const Terrain& terrain, const Vector& x,
                       const Vector& u) {
  return srbd_derivative<double>(model, terrain, x, u);
}

DynamicsJacobians srbd_jacobians(const RobotModel& model, const Terrain& terrain, const Vector& x,
                                 const Vector& u) {
  FunctionLinearization lin = linearize(x, u, [&](const VecX<Dual>& xd, const VecX<Dual>& ud) {
    return srbd_derivative<Dual>(model, terrain, xd, ud);
  });
  return {std::move(lin.dx), std::move(lin.du)};
}

Vector nominal_stance_state(const RobotModel& model, const Terrain& terrain, const Vector3& xy,
                            double yaw) {
  Vector x = Vector::Zero(kStateDim);
  x(sx::kTheta + 2) = yaw;
  x.segment<kNumJoints>(sx::kJoints) = model.nominal_joint_positions();
  // Place the torso so that the lowest contact touches the plane along n.
  x.segment<3>(sx::kPos) = Vector3(xy.x(), xy.y(), 0.0);
  const auto contacts = forward_kinematics(model, terrain, x);
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& c : contacts) {
    lowest = std::min(lowest, terrain.height_above(c.position));
  }
  x.segment<3>(sx::kPos) -= lowest * terrain.normal;
  return x;
}

Vector gravity_compensating_input(const RobotModel& model, const std::array<bool, kNumLegs>& stance) {
  Vector u = Vector::Zero(kInputDim);
  int count = 0;
  for (bool s : stance) {
    count += s ? 1 : 0;
  }
  if (count == 0) {
    return u;
  }
  const double fz = model.mass * model.gravity / count;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (stance[leg]) {
      u(ux::force(leg) + 2) = fz;
    }
  }
  return u;
}

}  // namespace wbmpc
