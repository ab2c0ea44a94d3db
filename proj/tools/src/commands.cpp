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

#include "wbmpc_cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "wbmpc/config.hpp"
#include "wbmpc_cli/plots.hpp"

namespace wbmpc::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error("cannot write " + path.string());
  }
  os << text;
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw Error("cannot write " + path.string());
  }
  writer(os);
}

}  // namespace

std::string summary_json(const SimLog& log, const std::vector<MetricRow>& metrics,
                         std::uint64_t seed) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scenario"] = log.scenario;
  j["seed"] = seed;
  j["duration"] = log.times.empty() ? 0.0 : log.times.back() + log.plant_step;
  j["fell"] = log.fell;
  if (log.fell) {
    j["fall_time"] = log.fall_time;
    j["fall_reason"] = log.fall_reason;
  }

  ordered_json pred = ordered_json::object();
  int samples = 0;
  ordered_json windows = ordered_json::object();
  for (const MetricRow& r : metrics) {
    if (r.metric == "prediction_error") {
      ++samples;
    } else if (r.metric == "prediction_error_mean") {
      pred["mean"] = r.value;
    } else if (r.metric == "prediction_error_std") {
      pred["std"] = r.value;
    } else if (r.metric == "swings" || r.metric == "cot") {
      ordered_json& w = windows[r.window];
      w["t_start"] = r.t_start;
      w["t_end"] = r.t_end;
      w[r.metric] = r.value;
    } else if (r.window == "all") {
      j[r.metric] = r.value;
    }
  }
  pred["samples"] = samples;
  j["prediction_error"] = pred;
  j["windows"] = windows;

  int degraded = 0;
  double mean_solve = 0.0, max_solve = 0.0;
  for (const CycleRecord& c : log.cycles) {
    degraded += c.degraded ? 1 : 0;
    mean_solve += c.solve_seconds;
    max_solve = std::max(max_solve, c.solve_seconds);
  }
  if (!log.cycles.empty()) {
    mean_solve /= static_cast<double>(log.cycles.size());
  }
  j["mpc"] = {{"cycles", log.cycles.size()},
              {"degraded_cycles", degraded},
              {"mean_solve_seconds", mean_solve},
              {"max_solve_seconds", max_solve}};
  j["executed_swings"] = log.swings.size();
  return j.dump(2) + "\n";
}

int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  Config config;
  Scenario scenario;
  try {
    config = load_config(manifest.config);
    scenario = load_scenario(resolve_scenario(manifest.config, manifest.scenario), config);
    if (manifest.seed) {
      scenario.seed = *manifest.seed;
    }
    config.controller.sim.async_mpc = manifest.async_mpc;
    config.controller.validate();
    const SimSettings& s = config.controller.sim;
    scenario.validate(s.horizon, s.mpc_period, s.plant_step);
  } catch (const Error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  std::error_code ec;
  fs::create_directories(manifest.out, ec);
  if (ec) {
    err << "config error: cannot create " << manifest.out.string() << ": " << ec.message() << '\n';
    return kExitConfigError;
  }

  SimLog log;
  try {
    log = run_scenario(scenario, config.controller);
  } catch (const Error& e) {
    err << "run failed: " << e.what() << '\n';
    return kExitRunFailure;
  }
  const std::vector<MetricRow> metrics = compute_metrics(log);
  try {
    write_csv(manifest.out / "states.csv", [&](std::ostream& os) { write_states_csv(log, os); });
    write_csv(manifest.out / "inputs.csv", [&](std::ostream& os) { write_inputs_csv(log, os); });
    write_csv(manifest.out / "contacts.csv", [&](std::ostream& os) { write_contacts_csv(log, os); });
    write_csv(manifest.out / "solver.csv", [&](std::ostream& os) { write_solver_csv(log, os); });
    write_csv(manifest.out / "metrics.csv",
              [&](std::ostream& os) { write_metrics_csv(metrics, os); });
    write_file(manifest.out / "summary.json", summary_json(log, metrics, scenario.seed));
  } catch (const Error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitRunFailure;
  }
  out << "scenario " << scenario.name << ": " << log.size() << " samples, "
      << log.cycles.size() << " MPC cycles, " << log.swings.size() << " swings\n";
  out << "outputs written to " << manifest.out.string() << '\n';

  if (manifest.plots) {
    const int rc = cmd_plot(manifest.out, out, err);
    if (rc != kExitOk) {
      return rc;
    }
  }
  if (log.fell) {
    err << "fall at t = " << log.fall_time << " s: " << log.fall_reason << '\n';
    return kExitRunFailure;
  }
  return kExitOk;
}

int cmd_plot(const fs::path& dir, std::ostream& out, std::ostream& err) {
  PlotReport report;
  try {
    report = write_plots(dir);
  } catch (const CsvError& e) {
    err << "plot error: " << e.what() << '\n';
    return kExitConfigError;
  }
  for (const std::string& w : report.warnings) {
    err << "warning: " << w << '\n';
  }
  for (const fs::path& p : report.written) {
    out << "wrote " << p.string() << '\n';
  }
  return kExitOk;
}

int cmd_selftest(const std::vector<Selftest>& tests, const SelftestOptions& options,
                 std::ostream& out) {
  return run_selftests(tests, options, out) == 0 ? kExitOk : kExitSelftestFailure;
}

}  // namespace wbmpc::cli
