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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "wbmpc/sim.hpp"
#include "wbmpc_cli/selftest.hpp"

namespace wbmpc::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitRunFailure = 3,
  kExitSelftestFailure = 4,
};

struct RunManifest {
  std::filesystem::path config = "config/default.yaml";
  std::string scenario;
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  bool async_mpc = false;
  bool plots = false;
};

/// Runs the scenario and writes states.csv, inputs.csv, contacts.csv,
/// metrics.csv and summary.json into manifest.out. Nothing is written when the
/// configuration cannot be loaded.
int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err);

/// Writes SVG figures next to the CSVs in `dir`.
int cmd_plot(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

int cmd_selftest(const std::vector<Selftest>& tests, const SelftestOptions& options,
                 std::ostream& out);

/// Aggregated run metrics as pretty-printed JSON.
std::string summary_json(const SimLog& log, const std::vector<MetricRow>& metrics,
                         std::uint64_t seed);

}  // namespace wbmpc::cli
