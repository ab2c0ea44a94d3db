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

#include "wbmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <ostream>
#include <random>

namespace wbmpc {

VelocityProfile::VelocityProfile(std::vector<VelocityKnot> knots) : knots_(std::move(knots)) {
  std::stable_sort(knots_.begin(), knots_.end(),
                   [](const VelocityKnot& a, const VelocityKnot& b) { return a.t < b.t; });
}

VelocityCommand VelocityProfile::at(double t) const {
  VelocityCommand cmd;
  if (knots_.empty()) {
    return cmd;
  }
  if (t <= knots_.front().t) {
    cmd.linear = knots_.front().linear;
    cmd.yaw_rate = knots_.front().yaw_rate;
    return cmd;
  }
  if (t >= knots_.back().t) {
    cmd.linear = knots_.back().linear;
    cmd.yaw_rate = knots_.back().yaw_rate;
    return cmd;
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                                   [](double v, const VelocityKnot& k) { return v < k.t; });
  const VelocityKnot& b = *it;
  const VelocityKnot& a = *(it - 1);
  const double span = b.t - a.t;
  const double w = span > 0.0 ? (t - a.t) / span : 1.0;
  cmd.linear = (1.0 - w) * a.linear + w * b.linear;
  cmd.yaw_rate = (1.0 - w) * a.yaw_rate + w * b.yaw_rate;
  return cmd;
}

bool VelocityProfile::constant_over(double t0, double t1) const {
  const VelocityCommand ref = at(t0);
  auto same = [&](double t) {
    const VelocityCommand c = at(t);
    return (c.linear - ref.linear).lpNorm<Eigen::Infinity>() < 1e-12 &&
           std::abs(c.yaw_rate - ref.yaw_rate) < 1e-12;
  };
  if (!same(t1)) {
    return false;
  }
  for (const VelocityKnot& k : knots_) {
    if (k.t > t0 && k.t < t1 && !same(k.t)) {
      return false;
    }
  }
  return true;
}

std::vector<std::pair<double, double>> Disturbance::windows(std::uint64_t seed) const {
  std::vector<std::pair<double, double>> out;
  switch (kind) {
    case Kind::None:
      break;
    case Kind::Constant:
      out.emplace_back(start, end);
      break;
    case Kind::Pulsed: {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> dist(-jitter, jitter);
      for (int k = 0;; ++k) {
        const double nominal = start + k * period;
        if (nominal >= end) {
          break;
        }
        const double offset = jitter > 0.0 ? dist(rng) : 0.0;
        const double s = std::max(start, nominal + offset);
        const double e = std::min(end, s + pulse_duration);
        if (e > s) {
          out.emplace_back(s, e);
        }
      }
      break;
    }
  }
  return out;
}

void Scenario::validate(double horizon, double mpc_period, double plant_step) const {
  if (!(duration > horizon)) {
    throw ConfigError("scenario '" + name + "': duration must exceed the horizon");
  }
  if (!(mpc_period >= plant_step)) {
    throw ConfigError("MPC period must not be shorter than the plant step");
  }
  if (!(mass_scale > 0.0)) {
    throw ConfigError("scenario '" + name + "': mass_scale must be positive");
  }
  if (disturbance.kind == Disturbance::Kind::Pulsed &&
      (!(disturbance.period > 0.0) || !(disturbance.pulse_duration > 0.0) ||
       disturbance.jitter < 0.0)) {
    throw ConfigError("scenario '" + name + "': invalid pulse parameters");
  }
  for (const MetricWindow& w : windows) {
    if (!(w.t_end > w.t_start)) {
      throw ConfigError("scenario '" + name + "': empty metric window '" + w.name + "'");
    }
  }
  terrain.validate();
}

void SimSettings::validate() const {
  if (!(horizon > 0.0) || !(node_dt > 0.0) || !(node_dt < horizon)) {
    throw ConfigError("mpc.horizon and mpc.dt must be positive with dt < horizon");
  }
  if (!(plant_step > 0.0) || !(mpc_period >= plant_step)) {
    throw ConfigError("sim.plant_step must be positive and not exceed mpc.period");
  }
  const double ratio = mpc_period / plant_step;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) {
    throw ConfigError("mpc.period must be a multiple of sim.plant_step");
  }
  if (!(fall_height > 0.0) || !(fall_angle > 0.0)) {
    throw ConfigError("fall thresholds must be positive");
  }
}

void ControllerConfig::validate() const {
  model.validate();
  gait.validate();
  cost.validate();
  swing.validate();
  mpc.solver.validate();
  sim.validate();
  if (mpc.iterations_per_cycle < 1 || mpc.initial_iterations < 1) {
    throw ConfigError("MPC iteration counts must be positive");
  }
}

Vector plant_derivative(const RobotModel& plant, const Terrain& terrain, const Vector& x,
                        const Vector& u, const Vector3& external_force) {
  Vector xdot = srbd_derivative(plant, terrain, x, u);
  if (!external_force.isZero(0.0)) {
    const Matrix3 r_wb = rotation_from_euler<double>(x.segment<3>(sx::kTheta));
    xdot.segment<3>(sx::kVel) += r_wb.transpose() * external_force / plant.mass;
  }
  return xdot;
}

namespace {

Vector plant_step(const RobotModel& plant, const Terrain& terrain, const Vector& x, const Vector& u,
                  const Vector3& force, double h) {
  const Vector k1 = plant_derivative(plant, terrain, x, u, force);
  const Vector k2 = plant_derivative(plant, terrain, x + 0.5 * h * k1, u, force);
  const Vector k3 = plant_derivative(plant, terrain, x + 0.5 * h * k2, u, force);
  const Vector k4 = plant_derivative(plant, terrain, x + h * k3, u, force);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Everything the plant needs from one controller update.
struct Plan {
  ModeSchedule schedule;
  SolveResult result;
};

class ClosedLoop {
 public:
  ClosedLoop(const Scenario& scenario, const ControllerConfig& config)
      : scenario_(scenario), cfg_(config), plant_(config.model), terrain_(scenario.terrain) {
    plant_.mass *= scenario.mass_scale;
    pulses_ = scenario.disturbance.windows(scenario.seed);
    x_ = nominal_stance_state(cfg_.model, terrain_, Vector3::Zero(), 0.0);
    nominal_height_ = terrain_.height_above(x_.segment<3>(sx::kPos));
    const auto contacts = forward_kinematics(cfg_.model, terrain_, x_);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      nominal_offsets_[leg] = contacts[leg].position - x_.segment<3>(sx::kPos);
      touchdown_offsets_[leg] = nominal_offsets_[leg];
      liftoff_[leg] = -1.0;
    }
    current_ = ModeSchedule::all_stance(0.0, cfg_.sim.horizon);
    last_flags_.fill(true);

    log_.scenario = scenario.name;
    log_.plant_step = cfg_.sim.plant_step;
    log_.horizon = cfg_.sim.horizon;
    log_.model = cfg_.model;
    log_.terrain = terrain_;
    log_.windows = scenario.windows;
    log_.velocity = scenario.velocity;
  }

  SimLog run() {
    const double h = cfg_.sim.plant_step;
    const long steps_per_cycle = std::lround(cfg_.sim.mpc_period / h);
    const long total_steps = std::lround(std::floor(scenario_.duration / h + 1e-9));
    std::optional<Plan> active;
    for (long step = 0; step < total_steps && !log_.fell;) {
      const double t_c = step * h;
      if (!active) {
        try {
          active = plan(x_, t_c, heading_, nullptr, current_);
        } catch (const Error& e) {
          fail(t_c, std::string("controller failure: ") + e.what());
          break;
        }
        record_cycle(*active, t_c);
      }
      const long cycle_end = std::min(total_steps, step + steps_per_cycle);
      if (cfg_.sim.async_mpc) {
        // Solve for the next cycle while the plant keeps executing the current plan.
        const Vector x_start = x_;
        const Plan previous = *active;
        const double heading = heading_;
        std::future<Plan> next = std::async(std::launch::async, [this, x_start, t_c, heading, previous] {
          return plan(x_start, t_c, heading, &previous.result, previous.schedule);
        });
        bool switched = false;
        for (; step < cycle_end && !log_.fell; ++step) {
          if (!switched && next.wait_for(std::chrono::seconds(0)) == std::future_status::ready) {
            switched = adopt(next, *active, step * h);
          }
          advance(*active, step * h);
        }
        if (!switched && !log_.fell) {
          adopt(next, *active, step * h);
        }
      } else {
        for (; step < cycle_end && !log_.fell; ++step) {
          advance(*active, step * h);
        }
        if (step < total_steps && !log_.fell) {
          const double t_next = step * h;
          try {
            Plan next = plan(x_, t_next, heading_, &active->result, current_);
            active = std::move(next);
          } catch (const Error& e) {
            fail(t_next, std::string("controller failure: ") + e.what());
            break;
          }
          record_cycle(*active, t_next);
        }
      }
    }
    close_swings();
    return std::move(log_);
  }

 private:
  bool adopt(std::future<Plan>& next, Plan& active, double t) {
    try {
      active = next.get();
      record_cycle(active, t);
      return true;
    } catch (const Error& e) {
      fail(t, std::string("controller failure: ") + e.what());
      return false;
    }
  }

  GaitState gait_state(const Vector& x, double t) const {
    GaitState gs;
    gs.time = t;
    gs.yaw = x(sx::kTheta + 2);
    gs.terrain_normal = terrain_.normal;
    gs.terrain_offset = terrain_.offset;
    const auto contacts = forward_kinematics(cfg_.model, terrain_, x);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      gs.legs[leg].contact_position = contacts[leg].position;
      gs.legs[leg].rolling_dir = contacts[leg].rolling_dir;
      gs.legs[leg].touchdown_offset = touchdown_offsets_[leg];
      gs.legs[leg].nominal_offset = nominal_offsets_[leg];
    }
    return gs;
  }

  // Position is re-anchored at the measured torso; the heading follows the
  // commanded yaw rate integrated over the whole run.
  ReferenceTrajectory reference(const Vector& x, double t, double heading) const {
    const Vector3 p = x.segment<3>(sx::kPos);
    const Vector3 anchor = p - (terrain_.height_above(p) - nominal_height_) * terrain_.normal;
    const VelocityProfile& profile = scenario_.velocity;
    return ReferenceTrajectory::integrate(anchor, heading, t, cfg_.sim.horizon,
                                          cfg_.sim.node_dt,
                                          [&profile](double s) { return profile.at(s); });
  }

  Plan plan(const Vector& x, double t, double heading, const SolveResult* previous,
            const ModeSchedule& current) const {
    const ReferenceTrajectory ref = reference(x, t, heading);
    const GaitState gs = gait_state(x, t);
    const double horizon = cfg_.sim.horizon;
    ModeSchedule schedule;
    try {
      schedule = generate_gait(cfg_.gait, gs, current, ref, horizon);
    } catch (const InfeasibleScheduleError&) {
      std::vector<ModeSchedule::Swing> committed;
      for (const auto& s : current.swings()) {
        if (s.liftoff <= t + 1e-9 && s.touchdown > t + 1e-9) {
          committed.push_back(s);
        }
      }
      schedule = ModeSchedule(t, t + horizon, committed);
    }
    const OcpFactory factory = [&](const Vector& x_meas, double /*t_now*/) {
      return std::unique_ptr<OptimalControlProblem>(assemble_ocp(cfg_.model, terrain_, schedule, ref,
                                                                 cfg_.cost, cfg_.swing, x_meas,
                                                                 horizon, cfg_.sim.node_dt));
    };
    Plan p;
    p.result = mpc_step(factory, x, t, previous, cfg_.mpc);
    p.schedule = std::move(schedule);
    return p;
  }

  void record_cycle(const Plan& p, double t) {
    current_ = p.schedule;
    CycleRecord rec;
    rec.time = t;
    rec.iterations = static_cast<int>(p.result.iterations.size());
    rec.converged = p.result.converged;
    rec.degraded = p.result.degraded;
    rec.failure = p.result.failure;
    rec.solve_seconds = p.result.solve_seconds;
    rec.merit = p.result.merit;
    const auto& nominal = p.result.nominal;
    rec.predicted_terminal = nominal.states.back().segment<3>(sx::kPos);
    rec.prediction_time = nominal.times.back();
    rec.planned_swings = static_cast<int>(p.schedule.swings().size());
    rec.solver_iterations = p.result.iterations;
    log_.cycles.push_back(rec);
  }

  Vector3 external_force(double t) const {
    Vector3 f = Vector3::Zero();
    for (const auto& [s, e] : pulses_) {
      if (t >= s && t < e) {
        f += scenario_.disturbance.force;
      }
    }
    return f;
  }

  void advance(const Plan& active, double t) {
    const ContactFlags flags = active.schedule.contact_flags_at(t);
    const auto contacts = forward_kinematics(cfg_.model, terrain_, x_);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (flags[leg] && !last_flags_[leg]) {
        const Vector3 rel = contacts[leg].position - x_.segment<3>(sx::kPos);
        touchdown_offsets_[leg] = rot_z<double>(x_(sx::kTheta + 2)).transpose() * rel;
        log_.swings.push_back({leg, liftoff_[leg], t});
        liftoff_[leg] = -1.0;
      } else if (!flags[leg] && last_flags_[leg]) {
        liftoff_[leg] = t;
      }
    }
    last_flags_ = flags;

    const LinearPolicy& policy = active.result.policy;
    Vector u = scenario_.mode == PolicyMode::Affine ? policy.evaluate(t, x_) : policy.feedforward_at(t);
    u = project_input(
        mode_constraints(cfg_.model, terrain_, cfg_.swing, active.schedule, x_, u, t, false), u);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (!flags[leg]) {
        u.segment<3>(ux::force(leg)).setZero();
      }
    }
    const Vector3 force = external_force(t);

    log_.times.push_back(t);
    log_.states.push_back(x_);
    log_.inputs.push_back(u);
    log_.contacts.push_back(flags);
    log_.disturbance.push_back(force);
    log_.commands.push_back(scenario_.velocity.at(t));

    const double h = cfg_.sim.plant_step;
    heading_ += 0.5 * h * (scenario_.velocity.at(t).yaw_rate + scenario_.velocity.at(t + h).yaw_rate);
    try {
      x_ = plant_step(plant_, terrain_, x_, u, force, h);
    } catch (const SingularityError& e) {
      fail(t + h, e.what());
      return;
    }
    check_fall(t + h);
  }

  void check_fall(double t) {
    if (!x_.allFinite()) {
      fail(t, "non-finite state");
      return;
    }
    if (terrain_.height_above(x_.segment<3>(sx::kPos)) < cfg_.sim.fall_height) {
      fail(t, "torso height below threshold");
      return;
    }
    if (std::abs(x_(sx::kTheta)) > cfg_.sim.fall_angle ||
        std::abs(x_(sx::kTheta + 1)) > cfg_.sim.fall_angle) {
      fail(t, "torso roll or pitch beyond threshold");
    }
  }

  void fail(double t, const std::string& reason) {
    if (!log_.fell) {
      log_.fell = true;
      log_.fall_time = t;
      log_.fall_reason = reason;
    }
  }

  void close_swings() {
    const double t_end = log_.times.empty() ? 0.0 : log_.times.back() + log_.plant_step;
    for (int leg = 0; leg < kNumLegs; ++leg) {
      if (liftoff_[leg] >= 0.0) {
        log_.swings.push_back({leg, liftoff_[leg], t_end});
      }
    }
    std::stable_sort(log_.swings.begin(), log_.swings.end(),
                     [](const auto& a, const auto& b) { return a.liftoff < b.liftoff; });
  }

  const Scenario& scenario_;
  const ControllerConfig& cfg_;
  RobotModel plant_;
  Terrain terrain_;
  std::vector<std::pair<double, double>> pulses_;
  Vector x_;
  double nominal_height_ = 0.0;
  double heading_ = 0.0;
  std::array<Vector3, kNumLegs> nominal_offsets_;
  std::array<Vector3, kNumLegs> touchdown_offsets_;
  std::array<double, kNumLegs> liftoff_{};
  ContactFlags last_flags_{};
  ModeSchedule current_;
  SimLog log_;
};

}  // namespace

SimLog run_scenario(const Scenario& scenario, const ControllerConfig& config) {
  config.validate();
  scenario.validate(config.sim.horizon, config.sim.mpc_period, config.sim.plant_step);
  ClosedLoop loop(scenario, config);
  return loop.run();
}

namespace {

// Index of the log sample at time t, if any.
std::optional<std::size_t> sample_index(const SimLog& log, double t) {
  if (log.times.empty()) {
    return std::nullopt;
  }
  const long i = std::lround((t - log.times.front()) / log.plant_step);
  if (i < 0 || static_cast<std::size_t>(i) >= log.times.size() ||
      std::abs(log.times[static_cast<std::size_t>(i)] - t) > 1e-6) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(i);
}

}  // namespace

std::vector<PredictionSample> prediction_error(const SimLog& log, double horizon) {
  std::vector<PredictionSample> out;
  for (const CycleRecord& c : log.cycles) {
    const double t = c.time + horizon;
    if (std::abs(c.prediction_time - t) > 1e-6) {
      continue;
    }
    const auto i = sample_index(log, t);
    if (!i || !log.velocity.constant_over(c.time, t)) {
      continue;
    }
    const Vector3 p = log.states[*i].segment<3>(sx::kPos);
    out.push_back({t, (c.predicted_terminal - p).norm()});
  }
  return out;
}

Eigen::Vector2d zmp(const std::vector<Vector3>& contact_points, const std::vector<Vector3>& forces,
                    const Terrain& terrain, double threshold) {
  Eigen::Vector2d num = Eigen::Vector2d::Zero();
  double den = 0.0;
  for (std::size_t i = 0; i < contact_points.size() && i < forces.size(); ++i) {
    const double fn = terrain.normal.dot(forces[i]);
    if (fn > threshold) {
      num += fn * contact_points[i].head<2>();
      den += fn;
    }
  }
  if (den <= 0.0) {
    throw UndefinedMetricError("ZMP undefined: no contact carries normal load");
  }
  return num / den;
}

Eigen::Vector2d zmp(const SimLog& log, std::size_t i, double threshold) {
  const auto contacts = forward_kinematics(log.model, log.terrain, log.states[i]);
  std::vector<Vector3> points, forces;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (log.contacts[i][leg]) {
      points.push_back(contacts[leg].position);
      forces.push_back(log.inputs[i].segment<3>(ux::force(leg)));
    }
  }
  return zmp(points, forces, log.terrain, threshold);
}

Eigen::Vector2d cart_table_zmp(const SimLog& log, std::size_t i, double threshold) {
  Vector3 total = Vector3::Zero();
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (log.contacts[i][leg]) {
      total += log.inputs[i].segment<3>(ux::force(leg));
    }
  }
  if (total.z() <= threshold) {
    throw UndefinedMetricError("cart-table ZMP undefined: no vertical load");
  }
  const Vector3 p = log.states[i].segment<3>(sx::kPos);
  const double height = log.terrain.height_above(p);
  return p.head<2>() - height * total.head<2>() / total.z();
}

namespace {

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

// Counter-clockwise hull without collinear points.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return (a - b).norm() < 1e-12; }),
            pts.end());
  if (pts.size() < 3) {
    return pts;
  }
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 1e-14) {
      --k;
    }
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 1e-14) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

double support_margin(const Eigen::Vector2d& point, const std::vector<Eigen::Vector2d>& points) {
  if (points.empty()) {
    throw UndefinedMetricError("support margin undefined without stance contacts");
  }
  const std::vector<Eigen::Vector2d> hull = convex_hull(points);
  if (hull.size() == 1) {
    return -(point - hull[0]).norm();
  }
  if (hull.size() == 2) {
    return -segment_distance(point, hull[0], hull[1]);
  }
  double dist = std::numeric_limits<double>::infinity();
  bool inside = true;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    dist = std::min(dist, segment_distance(point, a, b));
    if (cross2(a, b, point) < 0.0) {
      inside = false;
    }
  }
  return inside ? dist : -dist;
}

std::vector<Eigen::Vector2d> support_points(const SimLog& log, std::size_t i) {
  const auto contacts = forward_kinematics(log.model, log.terrain, log.states[i]);
  std::vector<Eigen::Vector2d> pts;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (log.contacts[i][leg]) {
      pts.push_back(contacts[leg].position.head<2>());
    }
  }
  return pts;
}

Eigen::Matrix<double, kNumJoints, 1> joint_torques(const RobotModel& model, const Terrain& terrain,
                                                   const Vector& x, const Vector& u,
                                                   const ContactFlags& stance) {
  Eigen::Matrix<double, kNumJoints, 1> tau = Eigen::Matrix<double, kNumJoints, 1>::Zero();
  const auto contacts = forward_kinematics(model, terrain, x);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (stance[leg]) {
      tau.segment<3>(kJointsPerLeg * leg) =
          -contacts[leg].leg_jacobian_world.transpose() * u.segment<3>(ux::force(leg));
    }
  }
  return tau;
}

double mechanical_cot(const SimLog& log, double t0, double t1, double min_speed) {
  double power = 0.0;
  double speed = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double t = log.times[i];
    if (t < t0 - 1e-12 || t >= t1 - 1e-12) {
      continue;
    }
    const Vector& x = log.states[i];
    const Vector& u = log.inputs[i];
    const auto tau = joint_torques(log.model, log.terrain, x, u, log.contacts[i]);
    const auto qd = u.segment<kNumJoints>(ux::kJointVel);
    for (int j = 0; j < kNumJoints; ++j) {
      power += std::max(tau(j) * qd(j), 0.0);
    }
    const Matrix3 r_wb = rotation_from_euler<double>(x.segment<3>(sx::kTheta));
    speed += (r_wb * x.segment<3>(sx::kVel)).head<2>().norm();
    ++count;
  }
  if (count == 0) {
    throw UndefinedMetricError("COT undefined: empty window");
  }
  power /= count;
  speed /= count;
  if (speed < min_speed) {
    throw UndefinedMetricError("COT undefined: mean speed below the floor");
  }
  return power / (log.model.mass * log.model.gravity * speed);
}

ConstraintStats constraint_stats(const SimLog& log) {
  ConstraintStats s;
  s.min_cone_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Vector& x = log.states[i];
    const Vector& u = log.inputs[i];
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vector3 lambda = u.segment<3>(ux::force(leg));
      if (log.contacts[i][leg]) {
        const Eigen::Vector2d r = stance_constraints(log.model, log.terrain, x, u, leg);
        s.max_stance_slip = std::max(s.max_stance_slip, r.cwiseAbs().maxCoeff());
        s.min_cone_margin = std::min(s.min_cone_margin, friction_cone(lambda, log.terrain).value);
      } else {
        s.max_swing_force = std::max(s.max_swing_force, lambda.norm());
      }
    }
  }
  return s;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  os << buf;
}

const char* kJointNames[kJointsPerLeg] = {"HAA", "HFE", "KFE"};

}  // namespace

void write_states_csv(const SimLog& log, std::ostream& os) {
  os << "t,roll,pitch,yaw,px,py,pz,wx,wy,wz,vx,vy,vz";
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (const char* j : kJointNames) {
      os << ",q_" << kLegNames[leg] << '_' << j;
    }
  }
  os << '\n';
  for (std::size_t i = 0; i < log.size(); ++i) {
    put(os, log.times[i]);
    for (Eigen::Index k = 0; k < log.states[i].size(); ++k) {
      os << ',';
      put(os, log.states[i](k));
    }
    os << '\n';
  }
}

void write_inputs_csv(const SimLog& log, std::ostream& os) {
  os << 't';
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (const char* axis : {"x", "y", "z"}) {
      os << ",f_" << kLegNames[leg] << '_' << axis;
    }
  }
  for (int leg = 0; leg < kNumLegs; ++leg) {
    for (const char* j : kJointNames) {
      os << ",qd_" << kLegNames[leg] << '_' << j;
    }
  }
  os << ",dist_x,dist_y,dist_z\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    put(os, log.times[i]);
    for (Eigen::Index k = 0; k < log.inputs[i].size(); ++k) {
      os << ',';
      put(os, log.inputs[i](k));
    }
    for (int k = 0; k < 3; ++k) {
      os << ',';
      put(os, log.disturbance[i](k));
    }
    os << '\n';
  }
}

void write_contacts_csv(const SimLog& log, std::ostream& os) {
  os << "t,LF,RF,LH,RH,vx_ref,vy_ref,yaw_rate_ref\n";
  for (std::size_t i = 0; i < log.size(); ++i) {
    put(os, log.times[i]);
    for (bool c : log.contacts[i]) {
      os << ',' << (c ? 1 : 0);
    }
    const VelocityCommand& cmd = log.commands[i];
    for (double v : {cmd.linear.x(), cmd.linear.y(), cmd.yaw_rate}) {
      os << ',';
      put(os, v);
    }
    os << '\n';
  }
}

void write_solver_csv(const SimLog& log, std::ostream& os) {
  os << "cycle,t,iteration,cost,equality_residual,min_cone_margin,step\n";
  for (std::size_t c = 0; c < log.cycles.size(); ++c) {
    const CycleRecord& rec = log.cycles[c];
    for (const IterationInfo& it : rec.solver_iterations) {
      os << c << ',';
      put(os, rec.time);
      os << ',' << it.iteration;
      for (double v : {it.cost, it.equality_residual, it.min_inequality, it.step}) {
        os << ',';
        put(os, v);
      }
      os << '\n';
    }
  }
}

std::vector<MetricRow> compute_metrics(const SimLog& log) {
  std::vector<MetricRow> rows;
  if (log.size() == 0) {
    return rows;
  }
  const double t_first = log.times.front();
  const double t_last = log.times.back() + log.plant_step;

  const auto pred = prediction_error(log, log.horizon);
  for (const PredictionSample& s : pred) {
    rows.push_back({"prediction_error", "sample", s.time - log.horizon, s.time, s.error});
  }
  if (!pred.empty()) {
    double mean = 0.0;
    for (const auto& s : pred) {
      mean += s.error;
    }
    mean /= static_cast<double>(pred.size());
    double var = 0.0;
    for (const auto& s : pred) {
      var += (s.error - mean) * (s.error - mean);
    }
    var /= static_cast<double>(pred.size());
    rows.push_back({"prediction_error_mean", "all", t_first, t_last, mean});
    rows.push_back({"prediction_error_std", "all", t_first, t_last, std::sqrt(var)});
  }

  // ZMP margins once per controller cycle.
  double min_zmp = std::numeric_limits<double>::infinity();
  double min_cart = std::numeric_limits<double>::infinity();
  for (const CycleRecord& c : log.cycles) {
    const auto i = sample_index(log, c.time);
    if (!i) {
      continue;
    }
    const auto pts = support_points(log, *i);
    if (pts.empty()) {
      continue;
    }
    try {
      const double m = support_margin(zmp(log, *i), pts);
      rows.push_back({"zmp_margin", "sample", c.time, c.time, m});
      min_zmp = std::min(min_zmp, m);
    } catch (const UndefinedMetricError&) {
    }
    try {
      const double m = support_margin(cart_table_zmp(log, *i), pts);
      rows.push_back({"cart_table_zmp_margin", "sample", c.time, c.time, m});
      min_cart = std::min(min_cart, m);
    } catch (const UndefinedMetricError&) {
    }
  }
  if (std::isfinite(min_zmp)) {
    rows.push_back({"zmp_margin_min", "all", t_first, t_last, min_zmp});
  }
  if (std::isfinite(min_cart)) {
    rows.push_back({"cart_table_zmp_margin_min", "all", t_first, t_last, min_cart});
  }

  for (const MetricWindow& w : log.windows) {
    if (w.t_start >= t_last) {
      continue;
    }
    int swings = 0;
    for (const auto& s : log.swings) {
      if (s.liftoff >= w.t_start && s.liftoff < w.t_end) {
        ++swings;
      }
    }
    rows.push_back({"swings", w.name, w.t_start, w.t_end, static_cast<double>(swings)});
    try {
      rows.push_back({"cot", w.name, w.t_start, w.t_end, mechanical_cot(log, w.t_start, w.t_end)});
    } catch (const UndefinedMetricError&) {
    }
  }

  const ConstraintStats cs = constraint_stats(log);
  rows.push_back({"max_swing_force", "all", t_first, t_last, cs.max_swing_force});
  rows.push_back({"max_stance_slip", "all", t_first, t_last, cs.max_stance_slip});
  if (std::isfinite(cs.min_cone_margin)) {
    rows.push_back({"min_cone_margin", "all", t_first, t_last, cs.min_cone_margin});
  }
  return rows;
}

void write_metrics_csv(const std::vector<MetricRow>& rows, std::ostream& os) {
  os << "metric,window,t_start,t_end,value\n";
  for (const MetricRow& r : rows) {
    os << r.metric << ',' << r.window << ',';
    put(os, r.t_start);
    os << ',';
    put(os, r.t_end);
    os << ',';
    put(os, r.value);
    os << '\n';
  }
}

}  // namespace wbmpc
