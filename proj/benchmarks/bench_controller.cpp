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

#include <memory>

#include <benchmark/benchmark.h>

#include "wbmpc/gait.hpp"
#include "wbmpc/model.hpp"
#include "wbmpc/ocp.hpp"
#include "wbmpc/solver.hpp"

namespace {

using namespace wbmpc;

constexpr double kHorizon = 0.8;
constexpr double kNodeDt = 0.015;

ReferenceTrajectory forward_reference(const Vector& x, double t0, double speed) {
  return ReferenceTrajectory::integrate(Vector3(x.segment<3>(sx::kPos)), 0.0, t0, kHorizon, kNodeDt,
                                        [speed](double) {
                                          return VelocityCommand{Vector3(speed, 0.0, 0.0), 0.0};
                                        });
}

// Trot-like schedule: two diagonal swings over the horizon.
ModeSchedule trot_schedule(double t0) {
  return ModeSchedule(t0, t0 + kHorizon,
                      {{0, t0 + 0.1, t0 + 0.4}, {3, t0 + 0.1, t0 + 0.4}, {1, t0 + 0.4, t0 + 0.7},
                       {2, t0 + 0.4, t0 + 0.7}});
}

std::unique_ptr<QuadrupedOcp> make_ocp(const Vector& x, double t0) {
  static const RobotModel model;
  static const Terrain terrain;
  return assemble_ocp(model, terrain, trot_schedule(t0), forward_reference(x, t0, 0.5),
                      CostConfig{}, SwingProfile{}, x, kHorizon);
}

void BM_GenerateGait(benchmark::State& state) {
  const RobotModel model;
  const Terrain terrain;
  const GaitConfig cfg;
  const Vector x = nominal_stance_state(model, terrain);
  const auto contacts = forward_kinematics(model, terrain, x);
  GaitState gs;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    gs.legs[leg].contact_position = contacts[leg].position;
    gs.legs[leg].rolling_dir = contacts[leg].rolling_dir;
    gs.legs[leg].touchdown_offset = contacts[leg].relative;
    gs.legs[leg].nominal_offset = contacts[leg].relative;
  }
  const ReferenceTrajectory ref = ReferenceTrajectory::integrate(
      x.segment<3>(sx::kPos), 0.0, 0.0, kHorizon, 0.005,
      [](double) { return VelocityCommand{Vector3(0.5, 0.3, 0.0), 0.7}; });
  const ModeSchedule current = ModeSchedule::all_stance(0.0, kHorizon);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_gait(cfg, gs, current, ref, kHorizon));
  }
}
BENCHMARK(BM_GenerateGait);

void BM_LqApproximation(benchmark::State& state) {
  const Vector x = nominal_stance_state(RobotModel{}, Terrain{});
  const auto ocp = make_ocp(x, 0.0);
  const SolverSettings settings;
  Trajectory nominal;
  nominal.times = ocp->time_grid();
  for (int k = 0; k <= ocp->num_intervals(); ++k) {
    nominal.states.push_back(x);
    if (k < ocp->num_intervals()) {
      nominal.inputs.push_back(ocp->initial_input_guess(k));
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(lq_approximation(*ocp, nominal, settings));
  }
  state.counters["nodes"] = ocp->num_intervals() + 1;
}
BENCHMARK(BM_LqApproximation)->Unit(benchmark::kMillisecond);

void BM_SlqSolveCold(benchmark::State& state) {
  const Vector x = nominal_stance_state(RobotModel{}, Terrain{});
  const auto ocp = make_ocp(x, 0.0);
  SolverSettings settings;
  settings.max_iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(slq_solve(*ocp, nullptr, settings));
  }
}
BENCHMARK(BM_SlqSolveCold)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

// Warm-started receding-horizon update, as run once per control cycle.
void BM_MpcStepWarm(benchmark::State& state) {
  const Vector x = nominal_stance_state(RobotModel{}, Terrain{});
  const OcpFactory factory = [](const Vector& xm, double t) -> std::unique_ptr<OptimalControlProblem> {
    return make_ocp(xm, t);
  };
  const MpcSettings settings;
  const SolveResult previous = mpc_step(factory, x, 0.0, nullptr, settings);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mpc_step(factory, x, 0.03, &previous, settings));
  }
}
BENCHMARK(BM_MpcStepWarm)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
