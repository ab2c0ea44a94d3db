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

// Aperiodic contact schedules from kinematic leg utilities.
//
// A leg in contact can only roll along its wheel's rolling direction. Its
// utility measures how far the torso reference has pulled the nominal contact
// location away from where the wheel can roll to, normalized by an ellipse with
// half-axes along and across the rolling direction. A leg whose utility drops
// below the threshold is recovered with a fixed-length swing, unless one of its
// neighbors is swinging, in which case the swing is postponed.

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wbmpc/common.hpp"

namespace wbmpc {

struct GaitConfig {
  double lambda_par = 0.25;   // ellipse half-axis along the rolling direction, m
  double lambda_perp = 0.10;  // ellipse half-axis lateral to the rolling direction, m
  double u_bar = 0.2;         // utility threshold
  double t_swing = 0.3;       // swing duration, s
  double dt_grid = 0.015;     // utility sampling, s

  void validate() const;
};

using ContactFlags = std::array<bool, kNumLegs>;

/// Switch times closer than this (s) are treated as simultaneous.
inline constexpr double kEventTolerance = 1e-9;

/// Contact phases over [start, end]. Built from swing intervals; a swing may
/// extend past `end`, in which case the phase list is truncated there.
class ModeSchedule {
 public:
  struct Swing {
    int leg = 0;
    double liftoff = 0.0;
    double touchdown = 0.0;
  };

  ModeSchedule() = default;
  ModeSchedule(double start, double end, std::vector<Swing> swings);

  /// All legs in contact over [start, end].
  static ModeSchedule all_stance(double start, double end);

  double start() const { return start_; }
  double end() const { return end_; }
  /// Interior switching times, strictly increasing.
  const std::vector<double>& event_times() const { return events_; }
  /// phases()[i] holds on [event_{i-1}, event_i); phases().size() == event_times().size() + 1.
  const std::vector<ContactFlags>& phases() const { return phases_; }
  const std::vector<Swing>& swings() const { return swings_; }

  /// Flags on the phase containing t (right-continuous at events).
  ContactFlags contact_flags_at(double t) const;
  bool in_contact(int leg, double t) const { return contact_flags_at(t)[leg]; }
  /// Swing of `leg` active at t, if any.
  std::optional<Swing> swing_at(int leg, double t) const;

  /// Rows "time,LF,RF,LH,RH" at every phase start, plus the horizon end.
  void write_csv(std::ostream& os) const;

 private:
  double start_ = 0.0;
  double end_ = 0.0;
  std::vector<Swing> swings_;
  std::vector<double> events_;
  std::vector<ContactFlags> phases_;
};

/// Torso reference pose over a horizon, integrated from reference velocities.
struct ReferenceSample {
  double t = 0.0;
  Vector3 position = Vector3::Zero();  // world, m
  double yaw = 0.0;                    // rad
  Vector3 velocity = Vector3::Zero();  // world, m/s
  double yaw_rate = 0.0;               // rad/s
};

/// Reference velocity command: heading-frame linear velocity and yaw rate.
struct VelocityCommand {
  Vector3 linear = Vector3::Zero();
  double yaw_rate = 0.0;
};

class ReferenceTrajectory {
 public:
  ReferenceTrajectory() = default;
  explicit ReferenceTrajectory(std::vector<ReferenceSample> samples);

  /// Integrate `command(t)` from the pose (position, yaw) at t0 over [t0, t0 + horizon].
  template <typename CommandFn>
  static ReferenceTrajectory integrate(const Vector3& position, double yaw, double t0,
                                       double horizon, double dt, CommandFn&& command);

  /// Linear interpolation, clamped at the ends.
  ReferenceSample at(double t) const;
  const std::vector<ReferenceSample>& samples() const { return samples_; }
  double start() const { return samples_.front().t; }
  double end() const { return samples_.back().t; }

 private:
  std::vector<ReferenceSample> samples_;
};

/// Per-leg measurements used by the gait generator.
struct LegGaitState {
  Vector3 contact_position = Vector3::Zero();  // measured wheel contact r_E, world
  Vector3 rolling_dir = Vector3::UnitX();      // world, unit
  Vector3 touchdown_offset = Vector3::Zero();  // r_BD in the yaw-aligned torso frame
  Vector3 nominal_offset = Vector3::Zero();    // nominal torso-to-contact offset, yaw frame
};

struct GaitState {
  double time = 0.0;
  double yaw = 0.0;  // measured torso yaw
  Vector3 terrain_normal = Vector3::UnitZ();
  double terrain_offset = 0.0;
  std::array<LegGaitState, kNumLegs> legs;
};

/// 1 - |(pi_par(e) / lambda_par, pi_perp(e) / lambda_perp)| with
/// e = r_Bref + r_BD - r_Eref. May be negative outside the ellipse.
double leg_utility(const GaitConfig& cfg, const Vector3& torso_ref, const Vector3& touchdown_offset,
                   const Vector3& wheel_ref, const Vector3& rolling_dir,
                   const Vector3& normal = Vector3::UnitZ());

/// Wheel reference after the torso reference moved by `displacement`: only the
/// component along the rolling direction is followed.
Vector3 rolled_reference(const Vector3& contact_position, const Vector3& displacement,
                         const Vector3& rolling_dir);

/// Utilities of all legs on the gait grid, for diagnostics and plotting.
struct UtilityTrace {
  std::vector<double> times;
  std::vector<std::array<double, kNumLegs>> values;
};

/// Contact schedule over [state.time, state.time + horizon]. Swings of `current`
/// that have already lifted off are kept until their touch-down.
ModeSchedule generate_gait(const GaitConfig& cfg, const GaitState& state, const ModeSchedule& current,
                           const ReferenceTrajectory& ref, double horizon,
                           UtilityTrace* trace = nullptr);

// Implementation.

template <typename CommandFn>
ReferenceTrajectory ReferenceTrajectory::integrate(const Vector3& position, double yaw, double t0,
                                                   double horizon, double dt, CommandFn&& command) {
  const int steps = std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9)));
  const double h = horizon / steps;
  std::vector<ReferenceSample> samples;
  samples.reserve(steps + 1);
  ReferenceSample s;
  s.t = t0;
  s.position = position;
  s.yaw = yaw;
  auto fill_rates = [&](ReferenceSample& sample) {
    const VelocityCommand cmd = command(sample.t);
    const double c = std::cos(sample.yaw), sn = std::sin(sample.yaw);
    sample.velocity = Vector3(c * cmd.linear.x() - sn * cmd.linear.y(),
                              sn * cmd.linear.x() + c * cmd.linear.y(), cmd.linear.z());
    sample.yaw_rate = cmd.yaw_rate;
  };
  fill_rates(s);
  samples.push_back(s);
  for (int i = 0; i < steps; ++i) {
    // Midpoint rule on the heading.
    const VelocityCommand mid = command(s.t + 0.5 * h);
    const double yaw_mid = s.yaw + 0.5 * h * mid.yaw_rate;
    const double c = std::cos(yaw_mid), sn = std::sin(yaw_mid);
    const Vector3 v_world(c * mid.linear.x() - sn * mid.linear.y(),
                          sn * mid.linear.x() + c * mid.linear.y(), mid.linear.z());
    ReferenceSample next;
    next.t = t0 + (i + 1) * h;
    next.position = s.position + h * v_world;
    next.yaw = s.yaw + h * mid.yaw_rate;
    fill_rates(next);
    samples.push_back(next);
    s = next;
  }
  return ReferenceTrajectory(std::move(samples));
}

}  // namespace wbmpc
