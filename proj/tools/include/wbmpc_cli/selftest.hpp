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

// Fast oracle checks runnable from the command line.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace wbmpc::cli {

struct SelftestOptions {
  /// Gravity scale of the model copy used as the finite-difference reference.
  /// Values other than 1 inject a fault the derivative checks must catch.
  double reference_gravity_scale = 1.0;
  int derivative_samples = 50;
};

struct SelftestOutcome {
  bool passed = false;
  std::string detail;
};

struct Selftest {
  std::string name;
  std::function<SelftestOutcome(const SelftestOptions&)> run;
};

/// Riccati equivalence, dynamics and contact Jacobians against finite
/// differences, barrier junction continuity and a gait threshold crossing.
std::vector<Selftest> default_selftests();

/// Prints one PASS/FAIL line per test. Returns the number of failures, or -1
/// for an empty registry.
int run_selftests(const std::vector<Selftest>& tests, const SelftestOptions& options,
                  std::ostream& os);

}  // namespace wbmpc::cli
