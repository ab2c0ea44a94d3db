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

#include "wbmpc/gait.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "wbmpc/model.hpp"

namespace wbmpc {

void GaitConfig::validate() const {
  if (!(lambda_par > 0.0) || !(lambda_perp > 0.0)) {
    throw ConfigError("gait half-axes must be positive");
  }
  if (!(u_bar > 0.0 && u_bar < 1.0)) {
    throw ConfigError("gait.u_bar must lie in (0, 1)");
  }
  if (!(t_swing > 0.0) || !(dt_grid > 0.0)) {
    throw ConfigError("gait.t_swing and gait.dt_grid must be positive");
  }
}

ModeSchedule::ModeSchedule(double start, double end, std::vector<Swing> swings)
    : start_(start), end_(end), swings_(std::move(swings)) {
  if (!(end > start)) {
    throw Error("ModeSchedule: empty horizon");
  }
  std::sort(swings_.begin(), swings_.end(), [](const Swing& a, const Swing& b) {
    return a.liftoff != b.liftoff ? a.liftoff < b.liftoff : a.leg < b.leg;
  });
  std::vector<double> candidates;
  for (const Swing& s : swings_) {
    if (!(s.touchdown > s.liftoff)) {
      throw Error("ModeSchedule: swing with non-positive duration");
    }
    for (double t : {s.liftoff, s.touchdown}) {
      if (t > start_ && t < end_) {
        candidates.push_back(t);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  // Liftoffs and touchdowns closer than kEventTolerance are one event.
  auto flags_at = [&](double t) {
    ContactFlags f;
    f.fill(true);
    for (const Swing& s : swings_) {
      if (t + kEventTolerance >= s.liftoff && t + kEventTolerance < s.touchdown) {
        f[s.leg] = false;
      }
    }
    return f;
  };
  phases_.push_back(flags_at(start_));
  double last = -std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    if (t - last < kEventTolerance) {
      continue;
    }
    last = t;
    const ContactFlags f = flags_at(t);
    if (f != phases_.back()) {
      events_.push_back(t);
      phases_.push_back(f);
    }
  }
}

ModeSchedule ModeSchedule::all_stance(double start, double end) { return ModeSchedule(start, end, {}); }

ContactFlags ModeSchedule::contact_flags_at(double t) const {
  const auto it = std::upper_bound(events_.begin(), events_.end(), t + kEventTolerance);
  return phases_[static_cast<std::size_t>(std::distance(events_.begin(), it))];
}

std::optional<ModeSchedule::Swing> ModeSchedule::swing_at(int leg, double t) const {
  for (const Swing& s : swings_) {
    if (s.leg == leg && t + kEventTolerance >= s.liftoff && t + kEventTolerance < s.touchdown) {
      return s;
    }
  }
  return std::nullopt;
}

void ModeSchedule::write_csv(std::ostream& os) const {
  os << "time,LF,RF,LH,RH\n";
  auto row = [&](double t, const ContactFlags& f) {
    os << t;
    for (bool c : f) {
      os << ',' << (c ? 1 : 0);
    }
    os << '\n';
  };
  row(start_, phases_.front());
  for (std::size_t i = 0; i < events_.size(); ++i) {
    row(events_[i], phases_[i + 1]);
  }
  row(end_, phases_.back());
}

ReferenceTrajectory::ReferenceTrajectory(std::vector<ReferenceSample> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty()) {
    throw Error("ReferenceTrajectory: no samples");
  }
}

ReferenceSample ReferenceTrajectory::at(double t) const {
  if (t <= samples_.front().t) {
    return samples_.front();
  }
  if (t >= samples_.back().t) {
    return samples_.back();
  }
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                                   [](double v, const ReferenceSample& s) { return v < s.t; });
  const ReferenceSample& b = *it;
  const ReferenceSample& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  ReferenceSample s;
  s.t = t;
  s.position = (1.0 - w) * a.position + w * b.position;
  s.yaw = (1.0 - w) * a.yaw + w * b.yaw;
  s.velocity = (1.0 - w) * a.velocity + w * b.velocity;
  s.yaw_rate = (1.0 - w) * a.yaw_rate + w * b.yaw_rate;
  return s;
}

double leg_utility(const GaitConfig& cfg, const Vector3& torso_ref, const Vector3& touchdown_offset,
                   const Vector3& wheel_ref, const Vector3& rolling_dir, const Vector3& normal) {
  const Vector3 error = torso_ref + touchdown_offset - wheel_ref;
  const Vector3 lateral = normal.cross(rolling_dir).normalized();
  const double along = rolling_dir.dot(error) / cfg.lambda_par;
  const double across = lateral.dot(error) / cfg.lambda_perp;
  return 1.0 - std::sqrt(along * along + across * across);
}

Vector3 rolled_reference(const Vector3& contact_position, const Vector3& displacement,
                         const Vector3& rolling_dir) {
  return contact_position + rolling_dir.dot(displacement) * rolling_dir;
}

namespace {

// Where a leg's utility is measured from: the last contact (re)set.
struct Anchor {
  double time = 0.0;  // relative to the schedule start
  Vector3 contact = Vector3::Zero();
  Vector3 rolling_dir = Vector3::UnitX();
  Vector3 offset = Vector3::Zero();  // yaw frame
  Vector3 torso_ref = Vector3::Zero();
};

struct Interval {
  double begin;
  double end;
};

struct LegPlan {
  std::vector<Anchor> anchors;  // increasing time
  std::vector<Interval> swings;
  double eligible_from = 0.0;
};

Vector3 yaw_rotate(double yaw, const Vector3& v) { return rot_z<double>(yaw) * v; }

bool in_swing(const LegPlan& plan, double t) {
  for (const Interval& s : plan.swings) {
    if (t >= s.begin - 1e-12 && t < s.end - 1e-12) {
      return true;
    }
  }
  return false;
}

const Anchor& anchor_at(const LegPlan& plan, double t) {
  const Anchor* a = &plan.anchors.front();
  for (const Anchor& candidate : plan.anchors) {
    if (candidate.time <= t + 1e-12) {
      a = &candidate;
    }
  }
  return *a;
}

class Generator {
 public:
  Generator(const GaitConfig& cfg, const GaitState& state, const ReferenceTrajectory& ref,
            double horizon)
      : cfg_(cfg), state_(state), ref_(ref), horizon_(horizon) {
    const int n = static_cast<int>(std::floor(horizon / cfg.dt_grid + 1e-9));
    for (int j = 0; j <= n; ++j) {
      grid_.push_back(j * cfg.dt_grid);
    }
    if (horizon - grid_.back() > 1e-9) {
      grid_.push_back(horizon);
    }
  }

  double utility(int leg, double t) const {
    const LegPlan& plan = plans_[leg];
    if (in_swing(plan, t)) {
      return 1.0;
    }
    const Anchor& a = anchor_at(plan, t);
    const ReferenceSample r = ref_.at(state_.time + t);
    const Vector3 wheel_ref = rolled_reference(a.contact, r.position - a.torso_ref, a.rolling_dir);
    return leg_utility(cfg_, r.position, yaw_rotate(r.yaw, a.offset), wheel_ref, a.rolling_dir,
                       state_.terrain_normal);
  }

  // Contact location and rolling direction predicted for a touch-down at t.
  Anchor reset_anchor(int leg, double t) const {
    const ReferenceSample r = ref_.at(state_.time + t);
    const Vector3& n = state_.terrain_normal;
    Anchor a;
    a.time = t;
    a.offset = state_.legs[leg].nominal_offset;
    a.torso_ref = r.position;
    Vector3 contact = r.position + yaw_rotate(r.yaw, a.offset);
    contact -= (n.dot(contact) - state_.terrain_offset) * n;
    a.contact = contact;
    Vector3 roll = yaw_rotate(r.yaw - state_.yaw, state_.legs[leg].rolling_dir);
    roll -= n.dot(roll) * n;
    a.rolling_dir = roll.normalized();
    return a;
  }

  void add_swing(int leg, double begin, double end) {
    LegPlan& plan = plans_[leg];
    plan.swings.push_back({begin, end});
    plan.anchors.push_back(reset_anchor(leg, end));
    plan.eligible_from = end;
  }

  // Earliest start >= t at which no neighbor swing overlaps [start, start + t_swing).
  double postpone(int leg, double t) const {
    double start = t;
    bool moved = true;
    while (moved) {
      moved = false;
      for (int nb : kNeighbors[leg]) {
        for (const Interval& s : plans_[nb].swings) {
          if (s.begin < start + cfg_.t_swing - 1e-12 && s.end > start + 1e-12) {
            start = s.end;
            moved = true;
          }
        }
      }
    }
    return start;
  }

  ModeSchedule run(const ModeSchedule& current, UtilityTrace* trace) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const LegGaitState& ls = state_.legs[leg];
      Anchor a;
      a.time = 0.0;
      a.contact = ls.contact_position;
      a.rolling_dir = ls.rolling_dir;
      a.offset = ls.touchdown_offset;
      a.torso_ref = ref_.at(state_.time).position;
      plans_[leg].anchors.push_back(a);
    }
    // Committed swings: lifted off at or before now.
    std::vector<ModeSchedule::Swing> swings;
    for (const ModeSchedule::Swing& s : current.swings()) {
      if (s.liftoff <= state_.time + 1e-9 && s.touchdown > state_.time + 1e-9) {
        add_swing(s.leg, s.liftoff - state_.time, s.touchdown - state_.time);
        swings.push_back(s);
      }
    }

    const int max_insertions = 16 * kNumLegs * static_cast<int>(grid_.size());
    for (int insertion = 0;; ++insertion) {
      if (insertion > max_insertions) {
        throw InfeasibleScheduleError("gait generation did not settle");
      }
      // Steps 1 and 2: earliest threshold crossing, lowest utility wins.
      int leg_star = -1;
      double t_star = 0.0;
      for (double t : grid_) {
        double lowest = cfg_.u_bar;
        for (int leg = 0; leg < kNumLegs; ++leg) {
          if (t < plans_[leg].eligible_from - 1e-12 || in_swing(plans_[leg], t)) {
            continue;
          }
          const double u = utility(leg, t);
          if (u < lowest) {
            lowest = u;
            leg_star = leg;
          }
        }
        if (leg_star >= 0) {
          t_star = t;
          break;
        }
      }
      if (leg_star < 0) {
        break;
      }
      // Step 3: wait for the neighbors to be in contact.
      const double start = postpone(leg_star, t_star);
      if (start >= horizon_ - 1e-12) {
        if (t_star <= 1e-12) {
          throw InfeasibleScheduleError("leg " + std::string(kLegNames[leg_star]) +
                                        " needs a swing that cannot start within the horizon");
        }
        plans_[leg_star].eligible_from = std::numeric_limits<double>::infinity();
        continue;
      }
      add_swing(leg_star, start, start + cfg_.t_swing);
      swings.push_back({leg_star, state_.time + start, state_.time + start + cfg_.t_swing});
    }

    if (trace != nullptr) {
      trace->times.clear();
      trace->values.clear();
      for (double t : grid_) {
        trace->times.push_back(state_.time + t);
        std::array<double, kNumLegs> u{};
        for (int leg = 0; leg < kNumLegs; ++leg) {
          u[leg] = utility(leg, t);
        }
        trace->values.push_back(u);
      }
    }
    return ModeSchedule(state_.time, state_.time + horizon_, std::move(swings));
  }

 private:
  const GaitConfig& cfg_;
  const GaitState& state_;
  const ReferenceTrajectory& ref_;
  double horizon_;
  std::vector<double> grid_;
  std::array<LegPlan, kNumLegs> plans_;
};

}  // namespace

ModeSchedule generate_gait(const GaitConfig& cfg, const GaitState& state, const ModeSchedule& current,
                           const ReferenceTrajectory& ref, double horizon, UtilityTrace* trace) {
  cfg.validate();
  if (!(horizon > 0.0)) {
    throw Error("generate_gait: horizon must be positive");
  }
  Generator gen(cfg, state, ref, horizon);
  return gen.run(current, trace);
}

}  // namespace wbmpc
