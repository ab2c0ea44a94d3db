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

// Acceptance checks for the controller. Prints one PASS/FAIL line per criterion
// and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "test_support.hpp"
#include "wbmpc/config.hpp"
#include "wbmpc/ocp.hpp"
#include "wbmpc/sim.hpp"
#include "wbmpc/solver.hpp"
#include "wbmpc_cli/commands.hpp"
#include "wbmpc_cli/oracles.hpp"

namespace fs = std::filesystem;
using namespace wbmpc;
using testing::relative_gap;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::vector<std::string> kScenarios = {"stand",    "drive_1ms",      "lateral_drift",
                                             "reversal", "mixed_velocity", "disturbed_drive"};

class Runs {
 public:
  explicit Runs(fs::path config_path)
      : config_path_(std::move(config_path)), config_(load_config(config_path_)) {}

  const Config& config() const { return config_; }
  const fs::path& config_path() const { return config_path_; }

  const SimLog& log(const std::string& name) {
    auto it = logs_.find(name);
    if (it == logs_.end()) {
      const Scenario sc = load_scenario(resolve_scenario(config_path_, name), config_);
      const auto t0 = std::chrono::steady_clock::now();
      it = logs_.emplace(name, run_scenario(sc, config_.controller)).first;
      std::cerr << "  simulated " << name << " in " << seconds_since(t0) << " s\n";
    }
    return it->second;
  }

 private:
  fs::path config_path_;
  Config config_;
  std::map<std::string, SimLog> logs_;
};

const MetricWindow& window(const SimLog& log, const std::string& name) {
  for (const MetricWindow& w : log.windows) {
    if (w.name == name) {
      return w;
    }
  }
  throw std::runtime_error("scenario " + log.scenario + " has no window " + name);
}

Verdict solver_oracle() {
  const cli::LinearQuadraticOcp ocp = cli::double_integrator_problem(2.0, 0.015);
  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult res = slq_solve(ocp, nullptr, SolverSettings{});
  const double runtime = seconds_since(t0);
  const double dt = ocp.interval(0);
  const double ref =
      cli::discrete_lqr_cost(cli::zoh_discretize(ocp.a(), ocp.b(), dt), ocp.q(), ocp.r(), ocp.qf(),
                             ocp.initial_state(), ocp.num_intervals(), dt);
  const double rel = std::abs(res.cost - ref) / std::abs(ref);
  return {rel < 1e-6 && runtime < 1.0,
          fmt("cost %.10g vs Riccati %.10g (rel %.2e), %.3f s", res.cost, ref, rel, runtime)};
}

Verdict derivative_suite() {
  const RobotModel model;
  const Terrain terrain;
  const Vector x_nom = nominal_stance_state(model, terrain);
  const ModeSchedule schedule(0.0, 0.8, {{0, 0.1, 0.4}, {3, 0.1, 0.4}, {1, 0.45, 0.75}});
  const ReferenceTrajectory ref = testing::constant_reference(
      x_nom.segment<3>(sx::kPos), 0.0, 0.0, 0.8, Vector3(0.8, 0.1, 0.0), 0.3, 0.015);
  const auto ocp = assemble_ocp(model, terrain, schedule, ref, CostConfig{}, SwingProfile{}, x_nom,
                                0.8);
  std::mt19937_64 rng(2026);
  const double h = 1e-6;
  const int samples = 1000;
  double dyn = 0.0, jac = 0.0, cost = 0.0, cons = 0.0;
  const auto t0 = std::chrono::steady_clock::now();

  const auto fd_columns = [&](const Vector& z, const std::function<Vector(const Vector&)>& f) {
    const Vector f0 = f(z);
    Matrix out(f0.size(), z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Vector zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      out.col(i) = (f(zp) - f(zm)) / (2.0 * h);
    }
    return out;
  };

  for (int s = 0; s < samples; ++s) {
    const Vector x = testing::random_state(rng, model, terrain);
    const Vector u = testing::random_input(rng);
    const int node = static_cast<int>(rng() % ocp->num_intervals());

    const DynamicsJacobians dj = srbd_jacobians(model, terrain, x, u);
    dyn = std::max(dyn, relative_gap(dj.state, fd_columns(x, [&](const Vector& xx) {
                                       return srbd_derivative(model, terrain, xx, u);
                                     })));
    dyn = std::max(dyn, relative_gap(dj.input, fd_columns(u, [&](const Vector& uu) {
                                       return srbd_derivative(model, terrain, x, uu);
                                     })));

    const Vector xdot = testing::kinematic_rate(x, u);
    const auto plus = forward_kinematics(model, terrain, Vector(x + h * xdot));
    const auto minus = forward_kinematics(model, terrain, Vector(x - h * xdot));
    Eigen::Matrix<double, 18, 1> gv;
    gv << x.segment<3>(sx::kOmega), x.segment<3>(sx::kVel), u.segment<kNumJoints>(ux::kJointVel);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Vector3 v = contact_jacobian(model, terrain, x, leg) * gv;
      jac = std::max(jac, relative_gap(v, (plus[leg].position - minus[leg].position) / (2.0 * h)));
    }

    const QuadraticModel c = ocp->running_cost(x, u, node);
    const auto scalar = [](double v) { return Vector::Constant(1, v); };
    cost = std::max(cost, relative_gap(c.dx.transpose(), fd_columns(x, [&](const Vector& xx) {
                                         return scalar(ocp->running_cost_value(xx, u, node));
                                       })));
    cost = std::max(cost, relative_gap(c.du.transpose(), fd_columns(u, [&](const Vector& uu) {
                                         return scalar(ocp->running_cost_value(x, uu, node));
                                       })));
    const QuadraticModel term = ocp->terminal_cost(x);
    Vector term_fd(kStateDim);
    for (int i = 0; i < kStateDim; ++i) {
      Vector xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      term_fd(i) = (ocp->terminal_cost(xp).value - ocp->terminal_cost(xm).value) / (2.0 * h);
    }
    cost = std::max(cost, relative_gap(term.dx, term_fd));

    const ConstraintLinearization eq = ocp->state_input_equalities(x, u, node, true);
    cons = std::max(cons, relative_gap(eq.dx, fd_columns(x, [&](const Vector& xx) {
                                         return ocp->state_input_equalities(xx, u, node, false).value;
                                       })));
    cons = std::max(cons, relative_gap(eq.du, fd_columns(u, [&](const Vector& uu) {
                                         return ocp->state_input_equalities(x, uu, node, false).value;
                                       })));
    const std::vector<QuadraticModel> ineq = ocp->inequalities(x, u, node);
    if (!ineq.empty()) {
      Matrix in_dx(ineq.size(), kStateDim), in_du(ineq.size(), kInputDim);
      for (std::size_t j = 0; j < ineq.size(); ++j) {
        in_dx.row(j) = ineq[j].dx.transpose();
        in_du.row(j) = ineq[j].du.transpose();
      }
      cons = std::max(cons, relative_gap(in_dx, fd_columns(x, [&](const Vector& xx) {
                                           return ocp->inequality_values(xx, u, node);
                                         })));
      cons = std::max(cons, relative_gap(in_du, fd_columns(u, [&](const Vector& uu) {
                                           return ocp->inequality_values(x, uu, node);
                                         })));
    }
  }
  const double runtime = seconds_since(t0);
  const double worst = std::max({dyn, jac, cost, cons});
  return {worst < 1e-5 && runtime < 30.0,
          fmt("%d samples, max rel gap dynamics %.1e contact %.1e cost %.1e constraints %.1e, "
              "%.1f s",
              samples, dyn, jac, cost, cons, runtime)};
}

Verdict constrained_toy() {
  const double u_min = -4.0;
  const cli::LinearQuadraticOcp ocp = cli::bounded_mass_problem(u_min);
  const cli::BruteForceResult bf = cli::brute_force_transcription(ocp, u_min, 10.0);
  // Barrier weight and relaxation tightened together.
  const std::vector<std::pair<double, double>> levels = {{1.0, 0.1}, {0.1, 0.01}, {0.01, 1e-3}};
  std::vector<double> gaps;
  bool feasible = true;
  std::string detail = fmt("brute force %.6f;", bf.cost);
  for (const auto& [mu, delta] : levels) {
    SolverSettings settings;
    settings.barrier_weight = mu;
    settings.barrier_relaxation = delta;
    settings.max_iterations = 50;
    settings.convergence_tolerance = 1e-10;
    const SolveResult res = slq_solve(ocp, nullptr, settings);
    const double gap = std::abs(res.cost - bf.cost) / bf.cost;
    gaps.push_back(gap);
    feasible = feasible && res.iterations.back().min_inequality >= -delta;
    detail += fmt(" mu %.0e: cost %.6f gap %.2e;", mu, res.cost, gap);
  }
  const bool monotone = gaps[1] < gaps[0] && gaps[2] < gaps[1];
  return {monotone && gaps.back() < 0.02 && feasible, detail};
}

double mean_prediction_error(const SimLog& log) {
  const std::vector<PredictionSample> samples = prediction_error(log, log.horizon);
  if (samples.empty()) {
    return std::numeric_limits<double>::infinity();
  }
  double sum = 0.0;
  for (const PredictionSample& s : samples) {
    sum += s.error;
  }
  return sum / static_cast<double>(samples.size());
}

Verdict prediction(Runs& runs) {
  const SimLog& nominal = runs.log("drive_1ms");
  const SimLog& disturbed = runs.log("disturbed_drive");
  const double e0 = mean_prediction_error(nominal);
  const double e1 = mean_prediction_error(disturbed);
  return {e0 < 0.02 && !nominal.fell && e1 < 0.15 && !disturbed.fell,
          fmt("drive_1ms mean %.4f m (fell %d), disturbed_drive mean %.4f m (fell %d)", e0,
              nominal.fell, e1, disturbed.fell)};
}

std::vector<int> swinging(const ContactFlags& flags) {
  std::vector<int> legs;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    if (!flags[leg]) {
      legs.push_back(leg);
    }
  }
  return legs;
}

Verdict gait_regimes(Runs& runs) {
  const SimLog& log = runs.log("mixed_velocity");
  const MetricWindow& drive = window(log, "drive");
  const MetricWindow& stat = window(log, "static");
  const MetricWindow& trot = window(log, "trot");
  int drive_swing_samples = 0, static_max = 0, trot_pairs = 0, bad_pairs = 0, repeats = 0;
  int neighbor_violations = 0;
  std::vector<int> static_legs;
  std::vector<int> last_pair;
  bool in_pair = false;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double t = log.times[i];
    const std::vector<int> legs = swinging(log.contacts[i]);
    for (std::size_t a = 0; a < legs.size(); ++a) {
      for (std::size_t b = a + 1; b < legs.size(); ++b) {
        neighbor_violations += are_neighbors(legs[a], legs[b]) ? 1 : 0;
      }
    }
    if (t >= drive.t_start && t < drive.t_end) {
      drive_swing_samples += legs.empty() ? 0 : 1;
    }
    if (t >= stat.t_start && t < stat.t_end) {
      static_max = std::max(static_max, static_cast<int>(legs.size()));
      static_legs.insert(static_legs.end(), legs.begin(), legs.end());
    }
    if (t >= trot.t_start && t < trot.t_end) {
      if (legs.size() == 2 && !in_pair) {
        const bool diagonal = (legs[0] == 0 && legs[1] == 3) || (legs[0] == 1 && legs[1] == 2);
        bad_pairs += diagonal ? 0 : 1;
        repeats += legs == last_pair ? 1 : 0;
        last_pair = legs;
        ++trot_pairs;
      }
      in_pair = legs.size() == 2;
    }
  }
  const bool a = drive_swing_samples == 0;
  const bool b = static_max <= 1 && !static_legs.empty();
  const bool c = trot_pairs >= 2 && bad_pairs == 0 && repeats == 0;
  return {a && b && c && neighbor_violations == 0 && !log.fell,
          fmt("(a) drive samples with a swing %d; (b) static max swinging %d; (c) trot pairs %d, "
              "non-diagonal %d, repeated %d; neighbor violations %d",
              drive_swing_samples, static_max, trot_pairs, bad_pairs, repeats,
              neighbor_violations)};
}

double mean_speed(const SimLog& log, const MetricWindow& w) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.times[i] >= w.t_start && log.times[i] < w.t_end) {
      sum += log.states[i].segment<2>(sx::kVel).norm();
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

Verdict cot_ordering(Runs& runs) {
  const SimLog& log = runs.log("mixed_velocity");
  const MetricWindow& drive = window(log, "drive");
  const MetricWindow& trot = window(log, "trot");
  const double cot_drive = mechanical_cot(log, drive.t_start, drive.t_end);
  const double cot_trot = mechanical_cot(log, trot.t_start, trot.t_end);
  return {cot_drive < cot_trot,
          fmt("drive %.5f at %.3f m/s, trot %.5f at %.3f m/s", cot_drive, mean_speed(log, drive),
              cot_trot, mean_speed(log, trot))};
}

Verdict zmp_divergence(Runs& runs) {
  const SimLog& log = runs.log("reversal");
  double min_margin = std::numeric_limits<double>::infinity();
  double t_min = 0.0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double m = support_margin(cart_table_zmp(log, i), support_points(log, i));
    if (m < min_margin) {
      min_margin = m;
      t_min = log.times[i];
    }
  }
  return {min_margin < 0.0 && !log.fell,
          fmt("min support margin %.4f m at t = %.3f s, fell %d", min_margin, t_min, log.fell)};
}

Verdict constraint_sweep(Runs& runs) {
  const double delta = runs.config().controller.mpc.solver.barrier_relaxation;
  bool ok = true;
  std::string detail;
  for (const std::string& name : kScenarios) {
    const SimLog& log = runs.log(name);
    const ConstraintStats s = constraint_stats(log);
    ok = ok && s.max_swing_force == 0.0 && s.max_stance_slip < 0.01 &&
         s.min_cone_margin >= -delta && !log.fell;
    detail += fmt(" %s: swing %.1g slip %.1e cone %.2f;", name.c_str(), s.max_swing_force,
                  s.max_stance_slip, s.min_cone_margin);
  }
  return {ok, detail};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism(const Runs& runs, const fs::path& work_dir) {
  const std::string scenario = "disturbed_drive";
  std::vector<fs::path> outs;
  for (int k = 0; k < 2; ++k) {
    cli::RunManifest m;
    m.config = runs.config_path();
    m.scenario = scenario;
    m.out = work_dir / fmt("%s_%d", scenario.c_str(), k);
    m.seed = 7;
    fs::remove_all(m.out);
    std::ostringstream out, err;
    if (cli::cmd_run(m, out, err) != cli::kExitOk) {
      return {false, "run failed: " + err.str()};
    }
    outs.push_back(m.out);
  }
  int files = 0;
  for (const char* f : {"states.csv", "inputs.csv", "contacts.csv", "solver.csv", "metrics.csv"}) {
    const std::string a = read_file(outs[0] / f);
    if (a.empty() || a != read_file(outs[1] / f)) {
      return {false, fmt("%s differs between runs", f)};
    }
    ++files;
  }
  return {true, fmt("%s seed 7: %d CSV files byte-identical", scenario.c_str(), files)};
}

Verdict throughput(Runs& runs) {
  const int limit = runs.config().controller.mpc.iterations_per_cycle;
  std::vector<double> times;
  for (const std::string& name : kScenarios) {
    for (const CycleRecord& c : runs.log(name).cycles) {
      if (c.iterations <= std::min(limit, 3)) {
        times.push_back(c.solve_seconds);
      }
    }
  }
  if (times.empty()) {
    return {false, "no cycles with at most 3 iterations"};
  }
  std::sort(times.begin(), times.end());
  const double worst = times.back();
  return {worst < 0.25, fmt("%zu cycles, median %.1f ms, max %.1f ms", times.size(),
                            1e3 * times[times.size() / 2], 1e3 * worst)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  fs::path config_path = "config/default.yaml";
  fs::path work_dir = "acceptance_runs";
  app.add_option("--config", config_path, "Controller configuration (YAML)")->check(
      CLI::ExistingFile);
  app.add_option("--work-dir", work_dir, "Directory for run outputs");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work_dir);

  Runs runs(config_path);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"solver_oracle_equivalence", solver_oracle},
      {"derivative_suite", derivative_suite},
      {"constrained_toy_oracle", constrained_toy},
      {"prediction_error", [&] { return prediction(runs); }},
      {"gait_regimes", [&] { return gait_regimes(runs); }},
      {"cot_ordering", [&] { return cot_ordering(runs); }},
      {"zmp_divergence", [&] { return zmp_divergence(runs); }},
      {"constraint_sweep", [&] { return constraint_sweep(runs); }},
      {"determinism", [&] { return determinism(runs, work_dir); }},
      {"throughput", [&] { return throughput(runs); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.passed ? 0 : 1;
    std::cout << (v.passed ? "PASS" : "FAIL") << " C" << i + 1 << " " << criteria[i].first
              << ": " << v.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures))
            << std::endl;
  return failures == 0 ? 0 : 1;
}
