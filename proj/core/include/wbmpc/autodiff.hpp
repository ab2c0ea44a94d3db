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

#include "wbmpc/common.hpp"

namespace wbmpc {

/// Value and Jacobians of a vector function g(x, u).
struct FunctionLinearization {
  Vector value;
  Matrix dx;
  Matrix du;
};

/// Seed x and u as independent variables and differentiate `fn` in forward mode.
/// `fn` takes (const VecX<Dual>&, const VecX<Dual>&) and returns VecX<Dual>.
template <typename Fn>
FunctionLinearization linearize(const Vector& x, const Vector& u, Fn&& fn) {
  const int nx = static_cast<int>(x.size());
  const int nu = static_cast<int>(u.size());
  const int n = nx + nu;
  if (n > kMaxAdDim) {
    throw Error("linearize: " + std::to_string(n) + " independent variables exceed the AD capacity");
  }
  VecX<Dual> xd(nx), ud(nu);
  for (int i = 0; i < nx; ++i) {
    xd(i) = Dual(x(i), n, i);
  }
  for (int i = 0; i < nu; ++i) {
    ud(i) = Dual(u(i), n, nx + i);
  }
  const VecX<Dual> out = fn(xd, ud);
  FunctionLinearization lin;
  lin.value.resize(out.size());
  lin.dx.setZero(out.size(), nx);
  lin.du.setZero(out.size(), nu);
  for (Eigen::Index r = 0; r < out.size(); ++r) {
    lin.value(r) = out(r).value();
    const auto& d = out(r).derivatives();
    if (d.size() == 0) {
      continue;  // constant output
    }
    lin.dx.row(r) = d.head(nx).transpose();
    lin.du.row(r) = d.segment(nx, nu).transpose();
  }
  return lin;
}

}  // namespace wbmpc
