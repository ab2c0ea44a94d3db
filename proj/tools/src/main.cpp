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

#include <iostream>

#include <CLI11.hpp>

#include "wbmpc_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace wbmpc::cli;
  CLI::App app{"Whole-body MPC for wheeled quadrupeds: closed-loop experiments"};
  app.require_subcommand(1);

  RunManifest manifest;
  std::uint64_t seed = 0;
  CLI::App* run = app.add_subcommand("run", "Run a scenario and write CSV logs");
  run->add_option("--config", manifest.config, "Controller configuration (YAML)")
      ->capture_default_str();
  run->add_option("--scenario", manifest.scenario, "Scenario name or path")->required();
  run->add_option("--out", manifest.out, "Output directory")->capture_default_str();
  CLI::Option* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_flag("--async-mpc", manifest.async_mpc,
                "Solve concurrently with the plant (not deterministic)");
  run->add_flag("--plots", manifest.plots, "Also write SVG figures");

  std::filesystem::path plot_dir = "out";
  CLI::App* plot = app.add_subcommand("plot", "Render SVG figures from a run directory");
  plot->add_option("--out,dir", plot_dir, "Run output directory")->capture_default_str();

  CLI::App* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  if (*run) {
    if (*seed_opt) {
      manifest.seed = seed;
    }
    return cmd_run(manifest, std::cout, std::cerr);
  }
  if (*plot) {
    return cmd_plot(plot_dir, std::cout, std::cerr);
  }
  if (*selftest) {
    return cmd_selftest(default_selftests(), SelftestOptions{}, std::cout);
  }
  return kExitConfigError;
}
