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

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace wbmpc {

inline constexpr int kNumLegs = 4;
inline constexpr int kJointsPerLeg = 3;
inline constexpr int kNumJoints = kNumLegs * kJointsPerLeg;
inline constexpr int kStateDim = 12 + kNumJoints;
inline constexpr int kInputDim = 3 * kNumLegs + kNumJoints;

// Largest stacked (state, input) dimension differentiated in one pass.
inline constexpr int kMaxAdDim = kStateDim + kInputDim;

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Forward-mode dual number with stack-allocated derivative storage.
using AdDerivative = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAdDim, 1>;
using Dual = Eigen::AutoDiffScalar<AdDerivative>;

/// Leg ordering used throughout: left-front, right-front, left-hind, right-hind.
enum class Leg : int { LF = 0, RF = 1, LH = 2, RH = 3 };

inline constexpr std::array<std::string_view, kNumLegs> kLegNames = {"LF", "RF", "LH", "RH"};

/// Adjacent legs never swing together: LF-RF, LF-LH, RF-RH, LH-RH.
inline constexpr std::array<std::array<int, 2>, kNumLegs> kNeighbors = {{
    {1, 2},  // LF: RF, LH
    {0, 3},  // RF: LF, RH
    {0, 3},  // LH: LF, RH
    {1, 2},  // RH: RF, LH
}};

inline constexpr bool are_neighbors(int a, int b) {
  return kNeighbors[a][0] == b || kNeighbors[a][1] == b;
}

inline constexpr int diagonal_partner(int leg) { return 3 - leg; }

// State layout: [theta(3) p(3) omega(3) v(3) q_j(12)].
namespace sx {
inline constexpr int kTheta = 0;
inline constexpr int kPos = 3;
inline constexpr int kOmega = 6;
inline constexpr int kVel = 9;
inline constexpr int kJoints = 12;
}  // namespace sx

// Input layout: [lambda_E(3 per leg) u_j(12)].
namespace ux {
inline constexpr int kForces = 0;
inline constexpr int kJointVel = 3 * kNumLegs;
inline constexpr int force(int leg) { return kForces + 3 * leg; }
inline constexpr int joint_vel(int leg) { return kJointVel + kJointsPerLeg * leg; }
}  // namespace ux

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Euler-angle parameterization evaluated too close to pitch = +-pi/2.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class InfeasibleScheduleError : public Error {
 public:
  using Error::Error;
};

class RegularizationError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Strip derivative information.
inline double value_of(double v) { return v; }
inline double value_of(const Dual& v) { return v.value(); }

}  // namespace wbmpc
