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

// Closed-loop harness: receding-horizon control of the kinodynamic plant,
// disturbance injection, logging and evaluation metrics.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wbmpc/gait.hpp"
#include "wbmpc/model.hpp"
#include "wbmpc/ocp.hpp"
#include "wbmpc/solver.hpp"

namespace wbmpc {

/// Piecewise-linear velocity command through knots, held after the last one.
struct VelocityKnot {
  double t = 0.0;
  Vector3 linear = Vector3::Zero();  // heading frame, m/s
  double yaw_rate = 0.0;             // rad/s
};

class VelocityProfile {
 public:
  VelocityProfile() = default;
  explicit VelocityProfile(std::vector<VelocityKnot> knots);

  VelocityCommand at(double t) const;
  /// True if the command does not change on [t0, t1].
  bool constant_over(double t0, double t1) const;
  const std::vector<VelocityKnot>& knots() const { return knots_; }

 private:
  std::vector<VelocityKnot> knots_;
};

/// External force on the torso COM, world frame.
struct Disturbance {
  enum class Kind { None, Constant, Pulsed };
  Kind kind = Kind::None;
  Vector3 force = Vector3::Zero();  // N
  double start = 0.0;               // s
  double end = 0.0;                 // s; constant force acts on [start, end)
  double period = 1.0;              // pulse spacing, s
  double pulse_duration = 0.2;      // s
  double jitter = 0.0;              // uniform pulse-start jitter, +- s

  /// Pulse windows on [start, end), drawn with `seed`.
  std::vector<std::pair<double, double>> windows(std::uint64_t seed) const;
};

enum class PolicyMode { Affine, Feedforward };

/// Named evaluation window (e.g. a gait regime segment).
struct MetricWindow {
  std::string name;
  double t_start = 0.0;
  double t_end = 0.0;
};

struct Scenario {
  std::string name;
  VelocityProfile velocity;
  Terrain terrain;
  Disturbance disturbance;
  double duration = 5.0;
  PolicyMode mode = PolicyMode::Affine;
  std::uint64_t seed = 0;
  double mass_scale = 1.0;  // plant mass relative to the model
  std::vector<MetricWindow> windows;

  void validate(double horizon, double mpc_period, double plant_step) const;
};

struct SimSettings {
  double horizon = 0.8;       // s
  double node_dt = 0.015;     // OCP grid spacing, s
  double mpc_period = 0.03;   // s
  double plant_step = 0.0025; // s
  double fall_height = 0.25;  // m, torso height above the terrain
  double fall_angle = 0.7;    // rad, |roll| or |pitch|
  bool async_mpc = false;

  void validate() const;
};

/// Everything the closed loop needs besides the scenario.
struct ControllerConfig {
  RobotModel model;
  GaitConfig gait;
  CostConfig cost;
  SwingProfile swing;
  MpcSettings mpc;
  SimSettings sim;

  void validate() const;
};

struct CycleRecord {
  double time = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degraded = false;
  std::string failure;
  double solve_seconds = 0.0;
  double merit = 0.0;
  Vector3 predicted_terminal = Vector3::Zero();  // planned COM position at time + horizon
  double prediction_time = 0.0;
  int planned_swings = 0;
  std::vector<IterationInfo> solver_iterations;
};

struct SimLog {
  std::string scenario;
  double plant_step = 0.0;
  double horizon = 0.0;
  RobotModel model;  // controller model
  Terrain terrain;
  // One entry per plant step; inputs[i] is held on [times[i], times[i] + plant_step).
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<ContactFlags> contacts;
  std::vector<Vector3> disturbance;
  std::vector<VelocityCommand> commands;
  std::vector<CycleRecord> cycles;
  std::vector<ModeSchedule::Swing> swings;  // executed swings
  std::vector<MetricWindow> windows;
  VelocityProfile velocity;
  bool fell = false;
  double fall_time = 0.0;
  std::string fall_reason;

  std::size_t size() const { return times.size(); }
};

/// Plant derivative: model dynamics plus an external world force on the COM.
Vector plant_derivative(const RobotModel& plant, const Terrain& terrain, const Vector& x,
                        const Vector& u, const Vector3& external_force);

/// Deterministic closed loop (unless settings.sim.async_mpc).
SimLog run_scenario(const Scenario& scenario, const ControllerConfig& config);

struct PredictionSample {
  double time = 0.0;  // measurement time
  double error = 0.0; // m
};

/// |p*(t - T) - p(t)| for every cycle whose terminal time was logged and whose
/// command was constant over [t - T, t].
std::vector<PredictionSample> prediction_error(const SimLog& log, double horizon);

/// Normal-force weighted centroid of contacts with F_n above `threshold`.
Eigen::Vector2d zmp(const std::vector<Vector3>& contact_points, const std::vector<Vector3>& forces,
                    const Terrain& terrain = Terrain{}, double threshold = 1.0);
/// Force-centroid ZMP of log sample i.
Eigen::Vector2d zmp(const SimLog& log, std::size_t i, double threshold = 1.0);

/// Cart-table ZMP of log sample i: p_xy - z * F_xy / F_z with z the COM height.
Eigen::Vector2d cart_table_zmp(const SimLog& log, std::size_t i, double threshold = 1.0);

/// Signed distance to the convex hull of `points` (positive inside). With two
/// points the hull is a segment and with one a point; the margin is then <= 0.
double support_margin(const Eigen::Vector2d& point, const std::vector<Eigen::Vector2d>& points);

/// Stance contact points (xy) of log sample i.
std::vector<Eigen::Vector2d> support_points(const SimLog& log, std::size_t i);

/// Joint torques balancing the contact forces, tau = -J_leg^T lambda, per stance leg.
Eigen::Matrix<double, kNumJoints, 1> joint_torques(const RobotModel& model, const Terrain& terrain,
                                                   const Vector& x, const Vector& u,
                                                   const ContactFlags& stance);

/// Sum over joints of max(tau_j q_dot_j, 0), averaged over [t0, t1), divided by
/// m g times the mean horizontal speed. Throws UndefinedMetricError below min_speed.
double mechanical_cot(const SimLog& log, double t0, double t1, double min_speed = 0.05);

struct ConstraintStats {
  double max_swing_force = 0.0;       // |lambda| of swing legs
  double max_stance_slip = 0.0;       // max |lateral . v_E|, |n . v_E| on stance legs
  double min_cone_margin = 0.0;       // min friction_cone value on stance legs
};

ConstraintStats constraint_stats(const SimLog& log);

/// Log exports.
void write_states_csv(const SimLog& log, std::ostream& os);
void write_inputs_csv(const SimLog& log, std::ostream& os);
void write_contacts_csv(const SimLog& log, std::ostream& os);
/// Per-iteration solver diagnostics of every MPC cycle.
void write_solver_csv(const SimLog& log, std::ostream& os);

struct MetricRow {
  std::string metric;
  std::string window;
  double t_start = 0.0;
  double t_end = 0.0;
  double value = 0.0;
};

/// Prediction error samples, ZMP margins, COT per window and constraint statistics.
std::vector<MetricRow> compute_metrics(const SimLog& log);
void write_metrics_csv(const std::vector<MetricRow>& rows, std::ostream& os);

}  // namespace wbmpc
