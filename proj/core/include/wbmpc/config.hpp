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

// YAML configuration: controller settings and scenario files.
//
// Config layout (all sections and keys optional, defaults apply):
//   robot:   mass, inertia [3], gravity, hip_offsets [[x,y,z] x4], thigh_length,
//            shank_length, wheel_radius, joint_limits [3], nominal_joints [3]
//   terrain: normal [3], offset, friction
//   gait:    lambda_par, lambda_perp, u_bar, t_swing, dt_grid
//   cost:    q {orientation, position, angular_rate, linear_velocity, joints},
//            r {forces, joint_velocities}, terminal_scale
//   swing:   apex_height
//   solver:  max_iterations, tolerance, integrator_step, barrier_weight,
//            barrier_relaxation, min_step, equality_penalty
//   mpc:     horizon, dt, period, iterations_per_cycle, initial_iterations
//   sim:     plant_step, fall_height, fall_angle

#include <filesystem>
#include <string>

#include "wbmpc/sim.hpp"

namespace wbmpc {

struct Config {
  ControllerConfig controller;
  Terrain terrain;  // default terrain for scenarios that do not set one
};

/// Throws ConfigError on unreadable files, unknown keys or invalid values.
Config load_config(const std::filesystem::path& path);
Config parse_config(const std::string& yaml_text);

/// Scenario file layout:
///   name, duration, seed, mode (affine | feedforward), mass_scale
///   velocity: [{t, vx, vy, yaw_rate}, ...]
///   terrain:  as in the config (defaults to the config terrain)
///   disturbance: {kind: none|constant|pulsed, force [3], start, end, period,
///                 pulse_duration, jitter}
///   windows: [{name, start, end}, ...]
Scenario load_scenario(const std::filesystem::path& path, const Config& config);
Scenario parse_scenario(const std::string& yaml_text, const Config& config);

/// `<config dir>/scenarios/<name>.yaml`, or `name` itself if it is a path to a file.
std::filesystem::path resolve_scenario(const std::filesystem::path& config_path,
                                       const std::string& name);

}  // namespace wbmpc
