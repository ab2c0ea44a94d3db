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

#include "wbmpc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace wbmpc {

namespace {

void check_keys(const YAML::Node& node, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!node) {
    return;
  }
  if (!node.IsMap()) {
    throw ConfigError("'" + section + "' must be a mapping");
  }
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (allowed.count(key) == 0) {
      throw ConfigError("unknown key '" + section + "." + key + "'");
    }
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& section) {
  if (const YAML::Node v = node[key]) {
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("invalid value for '" + section + "." + key + "'");
    }
  }
}

void read_vec3(const YAML::Node& node, const char* key, Vector3& out, const std::string& section) {
  if (const YAML::Node v = node[key]) {
    if (!v.IsSequence() || v.size() != 3) {
      throw ConfigError("'" + section + "." + key + "' must be a list of 3 numbers");
    }
    try {
      for (int i = 0; i < 3; ++i) {
        out(i) = v[i].as<double>();
      }
    } catch (const YAML::Exception&) {
      throw ConfigError("invalid value for '" + section + "." + key + "'");
    }
  }
}

void read_terrain(const YAML::Node& node, Terrain& terrain) {
  check_keys(node, "terrain", {"normal", "offset", "friction"});
  if (!node) {
    return;
  }
  read_vec3(node, "normal", terrain.normal, "terrain");
  read(node, "offset", terrain.offset, "terrain");
  read(node, "friction", terrain.friction, "terrain");
  if (terrain.normal.norm() > 0.0) {
    terrain.normal.normalize();
  }
}

Config from_node(const YAML::Node& root) {
  if (root && !root.IsNull() && !root.IsMap()) {
    throw ConfigError("config root must be a mapping");
  }
  check_keys(root, "config",
             {"robot", "terrain", "gait", "cost", "swing", "solver", "mpc", "sim"});
  Config cfg;
  ControllerConfig& c = cfg.controller;

  const YAML::Node robot = root["robot"];
  check_keys(robot, "robot",
             {"mass", "inertia", "gravity", "hip_offsets", "thigh_length", "shank_length",
              "wheel_radius", "joint_limits", "nominal_joints"});
  if (robot) {
    RobotModel& m = c.model;
    read(robot, "mass", m.mass, "robot");
    Vector3 inertia = m.inertia.diagonal();
    read_vec3(robot, "inertia", inertia, "robot");
    m.inertia = inertia.asDiagonal();
    read(robot, "gravity", m.gravity, "robot");
    if (const YAML::Node hips = robot["hip_offsets"]) {
      if (!hips.IsSequence() || hips.size() != kNumLegs) {
        throw ConfigError("'robot.hip_offsets' must list 4 points (LF, RF, LH, RH)");
      }
      for (int leg = 0; leg < kNumLegs; ++leg) {
        YAML::Node wrapper;
        wrapper["p"] = hips[leg];
        read_vec3(wrapper, "p", m.hip_offsets[leg], "robot.hip_offsets");
      }
    }
    read(robot, "thigh_length", m.thigh_length, "robot");
    read(robot, "shank_length", m.shank_length, "robot");
    read(robot, "wheel_radius", m.wheel_radius, "robot");
    read_vec3(robot, "joint_limits", m.joint_limits, "robot");
    read_vec3(robot, "nominal_joints", m.nominal_leg_joints, "robot");
  }

  read_terrain(root["terrain"], cfg.terrain);

  const YAML::Node gait = root["gait"];
  check_keys(gait, "gait", {"lambda_par", "lambda_perp", "u_bar", "t_swing", "dt_grid"});
  if (gait) {
    read(gait, "lambda_par", c.gait.lambda_par, "gait");
    read(gait, "lambda_perp", c.gait.lambda_perp, "gait");
    read(gait, "u_bar", c.gait.u_bar, "gait");
    read(gait, "t_swing", c.gait.t_swing, "gait");
    read(gait, "dt_grid", c.gait.dt_grid, "gait");
  }

  const YAML::Node cost = root["cost"];
  check_keys(cost, "cost", {"q", "r", "terminal_scale"});
  if (cost) {
    const YAML::Node q = cost["q"];
    check_keys(q, "cost.q",
               {"orientation", "position", "angular_rate", "linear_velocity", "joints"});
    if (q) {
      auto set = [&](const char* key, int offset, int n) {
        double w = c.cost.q_diag(offset);
        read(q, key, w, "cost.q");
        c.cost.q_diag.segment(offset, n).setConstant(w);
      };
      set("orientation", sx::kTheta, 3);
      set("position", sx::kPos, 3);
      set("angular_rate", sx::kOmega, 3);
      set("linear_velocity", sx::kVel, 3);
      set("joints", sx::kJoints, kNumJoints);
    }
    const YAML::Node r = cost["r"];
    check_keys(r, "cost.r", {"forces", "joint_velocities"});
    if (r) {
      double wf = c.cost.r_diag(0), wq = c.cost.r_diag(ux::kJointVel);
      read(r, "forces", wf, "cost.r");
      read(r, "joint_velocities", wq, "cost.r");
      c.cost.r_diag.head<3 * kNumLegs>().setConstant(wf);
      c.cost.r_diag.segment<kNumJoints>(ux::kJointVel).setConstant(wq);
    }
    read(cost, "terminal_scale", c.cost.terminal_scale, "cost");
  }

  const YAML::Node swing = root["swing"];
  check_keys(swing, "swing", {"apex_height"});
  if (swing) {
    read(swing, "apex_height", c.swing.apex_height, "swing");
  }

  const YAML::Node solver = root["solver"];
  check_keys(solver, "solver",
             {"max_iterations", "tolerance", "integrator_step", "barrier_weight",
              "barrier_relaxation", "min_step", "equality_penalty"});
  if (solver) {
    SolverSettings& s = c.mpc.solver;
    read(solver, "max_iterations", s.max_iterations, "solver");
    read(solver, "tolerance", s.convergence_tolerance, "solver");
    read(solver, "integrator_step", s.integrator_step, "solver");
    read(solver, "barrier_weight", s.barrier_weight, "solver");
    read(solver, "barrier_relaxation", s.barrier_relaxation, "solver");
    read(solver, "min_step", s.min_step, "solver");
    read(solver, "equality_penalty", s.equality_penalty, "solver");
  }

  const YAML::Node mpc = root["mpc"];
  check_keys(mpc, "mpc", {"horizon", "dt", "period", "iterations_per_cycle", "initial_iterations"});
  if (mpc) {
    read(mpc, "horizon", c.sim.horizon, "mpc");
    read(mpc, "dt", c.sim.node_dt, "mpc");
    read(mpc, "period", c.sim.mpc_period, "mpc");
    read(mpc, "iterations_per_cycle", c.mpc.iterations_per_cycle, "mpc");
    read(mpc, "initial_iterations", c.mpc.initial_iterations, "mpc");
  }

  const YAML::Node sim = root["sim"];
  check_keys(sim, "sim", {"plant_step", "fall_height", "fall_angle"});
  if (sim) {
    read(sim, "plant_step", c.sim.plant_step, "sim");
    read(sim, "fall_height", c.sim.fall_height, "sim");
    read(sim, "fall_angle", c.sim.fall_angle, "sim");
  }

  c.validate();
  cfg.terrain.validate();
  return cfg;
}

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML parse error: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Config parse_config(const std::string& yaml_text) { return from_node(parse_yaml(yaml_text)); }

Config load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Scenario parse_scenario(const std::string& yaml_text, const Config& config) {
  const YAML::Node root = parse_yaml(yaml_text);
  if (!root.IsMap()) {
    throw ConfigError("scenario must be a mapping");
  }
  check_keys(root, "scenario",
             {"name", "duration", "seed", "mode", "mass_scale", "velocity", "terrain",
              "disturbance", "windows"});
  Scenario s;
  s.terrain = config.terrain;
  read(root, "name", s.name, "scenario");
  read(root, "duration", s.duration, "scenario");
  read(root, "seed", s.seed, "scenario");
  read(root, "mass_scale", s.mass_scale, "scenario");
  std::string mode = "affine";
  read(root, "mode", mode, "scenario");
  if (mode == "affine") {
    s.mode = PolicyMode::Affine;
  } else if (mode == "feedforward") {
    s.mode = PolicyMode::Feedforward;
  } else {
    throw ConfigError("scenario.mode must be 'affine' or 'feedforward'");
  }

  std::vector<VelocityKnot> knots;
  if (const YAML::Node vel = root["velocity"]) {
    if (!vel.IsSequence()) {
      throw ConfigError("scenario.velocity must be a list of knots");
    }
    for (const YAML::Node& k : vel) {
      check_keys(k, "scenario.velocity[]", {"t", "vx", "vy", "yaw_rate"});
      VelocityKnot knot;
      read(k, "t", knot.t, "scenario.velocity");
      read(k, "vx", knot.linear.x(), "scenario.velocity");
      read(k, "vy", knot.linear.y(), "scenario.velocity");
      read(k, "yaw_rate", knot.yaw_rate, "scenario.velocity");
      knots.push_back(knot);
    }
  }
  s.velocity = VelocityProfile(std::move(knots));

  read_terrain(root["terrain"], s.terrain);

  if (const YAML::Node d = root["disturbance"]) {
    check_keys(d, "scenario.disturbance",
               {"kind", "force", "start", "end", "period", "pulse_duration", "jitter"});
    std::string kind = "none";
    read(d, "kind", kind, "scenario.disturbance");
    if (kind == "none") {
      s.disturbance.kind = Disturbance::Kind::None;
    } else if (kind == "constant") {
      s.disturbance.kind = Disturbance::Kind::Constant;
    } else if (kind == "pulsed") {
      s.disturbance.kind = Disturbance::Kind::Pulsed;
    } else {
      throw ConfigError("scenario.disturbance.kind must be none, constant or pulsed");
    }
    read_vec3(d, "force", s.disturbance.force, "scenario.disturbance");
    s.disturbance.end = s.duration;
    read(d, "start", s.disturbance.start, "scenario.disturbance");
    read(d, "end", s.disturbance.end, "scenario.disturbance");
    read(d, "period", s.disturbance.period, "scenario.disturbance");
    read(d, "pulse_duration", s.disturbance.pulse_duration, "scenario.disturbance");
    read(d, "jitter", s.disturbance.jitter, "scenario.disturbance");
  }

  if (const YAML::Node w = root["windows"]) {
    if (!w.IsSequence()) {
      throw ConfigError("scenario.windows must be a list");
    }
    for (const YAML::Node& item : w) {
      check_keys(item, "scenario.windows[]", {"name", "start", "end"});
      MetricWindow mw;
      read(item, "name", mw.name, "scenario.windows");
      read(item, "start", mw.t_start, "scenario.windows");
      read(item, "end", mw.t_end, "scenario.windows");
      s.windows.push_back(mw);
    }
  }

  const ControllerConfig& c = config.controller;
  s.validate(c.sim.horizon, c.sim.mpc_period, c.sim.plant_step);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const Config& config) {
  try {
    Scenario s = parse_scenario(read_file(path), config);
    if (s.name.empty()) {
      s.name = path.stem().string();
    }
    return s;
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_scenario(const std::filesystem::path& config_path,
                                       const std::string& name) {
  const std::filesystem::path direct(name);
  if (direct.has_extension() && std::filesystem::is_regular_file(direct)) {
    return direct;
  }
  return config_path.parent_path() / "scenarios" / (name + ".yaml");
}

}  // namespace wbmpc
