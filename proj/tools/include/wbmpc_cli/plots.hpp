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

// Static SVG figures from a run directory. Output is a pure function of the
// CSV contents, so identical logs give byte-identical images.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "wbmpc_cli/csv.hpp"

namespace wbmpc::cli {

/// Stance bars per leg, rows top to bottom LF, RF, LH, RH.
std::string contact_diagram_svg(const CsvTable& contacts);
/// Measured body velocities against the commanded ones.
std::string velocity_svg(const CsvTable& states, const CsvTable& contacts);
/// Prediction error samples over time. Empty string if the metrics hold none.
std::string prediction_error_svg(const CsvTable& metrics);
/// Mechanical COT per evaluation window as a step trace. Empty string if none.
std::string cot_svg(const CsvTable& metrics);

struct PlotReport {
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

/// Reads states.csv, contacts.csv and metrics.csv from `dir` and writes
/// contacts.svg, velocity.svg, prediction_error.svg and cot.svg next to them.
/// Figures without data are skipped with a warning. Throws CsvError.
PlotReport write_plots(const std::filesystem::path& dir);

}  // namespace wbmpc::cli
