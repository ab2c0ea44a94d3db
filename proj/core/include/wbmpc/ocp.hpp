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

// Optimal control problem for the wheeled quadruped: deviation tracking cost,
// contact-mode equalities and a smoothed friction cone.

#include <memory>
#include <optional>
#include <vector>

#include "wbmpc/gait.hpp"
#include "wbmpc/model.hpp"
#include "wbmpc/solver.hpp"

namespace wbmpc {

struct CostConfig {
  Vector q_diag = default_state_weights();
  Vector r_diag = default_input_weights();
  double terminal_scale = 10.0;  // Q_f = terminal_scale * Q

  static Vector default_state_weights();
  static Vector default_input_weights();
  void validate() const;
};

/// Vertical swing trajectory z(s) = h * 64 s^3 (1 - s)^3, s in [0, 1].
/// Zero height, velocity and acceleration at lift-off and touch-down, apex h at s = 1/2.
struct SwingProfile {
  double apex_height = 0.09;

  void validate() const;
  double height(double phase) const;
  /// dz/dt for a swing of length `duration` lifting off at `liftoff`; zero outside the swing.
  double velocity(double t, double liftoff, double duration) const;
};

/// 0.5 dx' Q dx + 0.5 du' R du with dx = x - x_ref, du = u - u_ref.
QuadraticModel tracking_cost(const Vector& q_diag, const Vector& r_diag, const Vector& x,
                             const Vector& u, const Vector& x_ref, const Vector& u_ref);

/// Smoothed cone h = mu F_z - sqrt(F_x^2 + F_y^2 + eps^2) in the surface frame.
struct ConeValue {
  double value = 0.0;
  Vector3 gradient = Vector3::Zero();  // w.r.t. the world force
  Matrix3 hessian = Matrix3::Zero();
};

inline constexpr double kConeSmoothing = 0.01;

ConeValue friction_cone(const Vector3& lambda, const Terrain& terrain,
                        double smoothing = kConeSmoothing);

/// [lateral . v_E, n . v_E] for a leg in contact.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> stance_residual(const RobotModel& model, const Terrain& terrain,
                                            const VecX<Scalar>& x, const VecX<Scalar>& u, int leg);

/// [lambda (3), n . v_E - c] for a swing leg with reference normal velocity c.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> swing_residual(const RobotModel& model, const Terrain& terrain,
                                           const VecX<Scalar>& x, const VecX<Scalar>& u, int leg,
                                           double normal_velocity_ref);

Eigen::Vector2d stance_constraints(const RobotModel& model, const Terrain& terrain, const Vector& x,
                                   const Vector& u, int leg);

/// `swing` is the active swing interval of `leg` (liftoff, touchdown).
Eigen::Vector4d swing_constraints(const RobotModel& model, const Terrain& terrain,
                                  const SwingProfile& profile, const ModeSchedule::Swing& swing,
                                  const Vector& x, const Vector& u, int leg, double t);

/// Stacked equalities of all legs for the contact flags at t. Rows per leg:
/// 2 in stance, 4 in swing. The input Jacobian is exact; the state Jacobian is
/// only filled when requested.
ConstraintLinearization mode_constraints(const RobotModel& model, const Terrain& terrain,
                                         const SwingProfile& profile, const ModeSchedule& schedule,
                                         const Vector& x, const Vector& u, double t,
                                         bool with_state_derivative);

class QuadrupedDynamics final : public DynamicsAdapter<QuadrupedDynamics> {
 public:
  QuadrupedDynamics(RobotModel model, Terrain terrain)
      : model_(std::move(model)), terrain_(std::move(terrain)) {}

  int state_dim() const override { return kStateDim; }
  int input_dim() const override { return kInputDim; }

  template <typename Scalar>
  VecX<Scalar> eval(const VecX<Scalar>& x, const VecX<Scalar>& u, double /*t*/) const {
    return srbd_derivative<Scalar>(model_, terrain_, x, u);
  }

 private:
  RobotModel model_;
  Terrain terrain_;
};

struct ConstraintCounts {
  int equalities = 0;
  int inequalities = 0;
};

/// Problem data bound to one mode schedule and reference. Immutable after construction.
class QuadrupedOcp final : public OptimalControlProblem {
 public:
  QuadrupedOcp(RobotModel model, Terrain terrain, ModeSchedule schedule, ReferenceTrajectory ref,
               CostConfig cost, SwingProfile swing, Vector x0, double horizon, double dt);

  const ContinuousDynamics& dynamics() const override { return dynamics_; }
  const std::vector<double>& time_grid() const override { return grid_; }
  const Vector& initial_state() const override { return x0_; }
  Vector initial_input_guess(int node) const override { return u_ref_[node]; }
  Vector initial_state_guess(int node) const override { return x_ref_[node]; }

  QuadraticModel running_cost(const Vector& x, const Vector& u, int node) const override;
  double running_cost_value(const Vector& x, const Vector& u, int node) const override;
  QuadraticModel terminal_cost(const Vector& x) const override;
  ConstraintLinearization state_input_equalities(const Vector& x, const Vector& u, int node,
                                                 bool with_state_derivative) const override;
  std::vector<QuadraticModel> inequalities(const Vector& x, const Vector& u, int node) const override;
  Vector inequality_values(const Vector& x, const Vector& u, int node) const override;

  /// Tracking cost at an arbitrary time.
  QuadraticModel running_cost_at(const Vector& x, const Vector& u, double t) const;
  Vector reference_state(double t) const;
  Vector reference_input(double t) const;

  ContactFlags contact_flags(int node) const { return flags_[node]; }
  ConstraintCounts constraint_counts(int node) const;

  const RobotModel& model() const { return model_; }
  const Terrain& terrain() const { return terrain_; }
  const ModeSchedule& schedule() const { return schedule_; }
  const ReferenceTrajectory& reference() const { return ref_; }
  const CostConfig& cost_config() const { return cost_; }
  const SwingProfile& swing_profile() const { return swing_; }

 private:
  RobotModel model_;
  Terrain terrain_;
  ModeSchedule schedule_;
  ReferenceTrajectory ref_;
  CostConfig cost_;
  SwingProfile swing_;
  Vector x0_;
  QuadrupedDynamics dynamics_;
  std::vector<double> grid_;
  std::vector<ContactFlags> flags_;
  std::vector<Vector> x_ref_;
  std::vector<Vector> u_ref_;
};

/// Node grid: multiples of dt from t0, every schedule event, and t0 + horizon.
/// Uniform nodes closer than dt / 4 to an event or the end are dropped.
std::vector<double> make_time_grid(double t0, double horizon, double dt,
                                   const std::vector<double>& events);

std::unique_ptr<QuadrupedOcp> assemble_ocp(const RobotModel& model, const Terrain& terrain,
                                           const ModeSchedule& schedule,
                                           const ReferenceTrajectory& ref, const CostConfig& cost,
                                           const SwingProfile& swing, const Vector& x0,
                                           double horizon, double dt = 0.015);

// Implementation.

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> stance_residual(const RobotModel& model, const Terrain& terrain,
                                            const VecX<Scalar>& x, const VecX<Scalar>& u, int leg) {
  const Mat3<Scalar> r_wb = rotation_from_euler<Scalar>(x.template segment<3>(sx::kTheta));
  const ContactKinematics<Scalar> c = contact_kinematics<Scalar>(
      model, terrain, r_wb, x.template segment<3>(sx::kPos), leg_joints<Scalar>(x, leg), leg);
  const Vec3<Scalar> v_e =
      contact_velocity<Scalar>(r_wb, c, x.template segment<3>(sx::kOmega),
                               x.template segment<3>(sx::kVel),
                               u.template segment<3>(ux::joint_vel(leg)));
  Eigen::Matrix<Scalar, 2, 1> out;
  out(0) = c.lateral_dir.dot(v_e);
  out(1) = terrain.normal.cast<Scalar>().dot(v_e);
  return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 1> swing_residual(const RobotModel& model, const Terrain& terrain,
                                           const VecX<Scalar>& x, const VecX<Scalar>& u, int leg,
                                           double normal_velocity_ref) {
  const Mat3<Scalar> r_wb = rotation_from_euler<Scalar>(x.template segment<3>(sx::kTheta));
  const ContactKinematics<Scalar> c = contact_kinematics<Scalar>(
      model, terrain, r_wb, x.template segment<3>(sx::kPos), leg_joints<Scalar>(x, leg), leg);
  const Vec3<Scalar> v_e =
      contact_velocity<Scalar>(r_wb, c, x.template segment<3>(sx::kOmega),
                               x.template segment<3>(sx::kVel),
                               u.template segment<3>(ux::joint_vel(leg)));
  Eigen::Matrix<Scalar, 4, 1> out;
  out.template head<3>() = u.template segment<3>(ux::force(leg));
  out(3) = terrain.normal.cast<Scalar>().dot(v_e) - Scalar(normal_velocity_ref);
  return out;
}

}  // namespace wbmpc
