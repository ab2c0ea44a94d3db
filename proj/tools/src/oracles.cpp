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

#include "wbmpc_cli/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace wbmpc::cli {

LinearQuadraticOcp::LinearQuadraticOcp(Matrix a, Matrix b, Matrix q, Matrix r, Matrix qf, Vector x0,
                                       double horizon, double dt)
    : a_(std::move(a)),
      b_(std::move(b)),
      q_(std::move(q)),
      r_(std::move(r)),
      qf_(std::move(qf)),
      x0_(std::move(x0)),
      dynamics_(a_, b_) {
  const int n = static_cast<int>(std::lround(horizon / dt));
  for (int k = 0; k <= n; ++k) {
    grid_.push_back(k * dt);
  }
}

QuadraticModel LinearQuadraticOcp::running_cost(const Vector& x, const Vector& u, int /*node*/) const {
  QuadraticModel m;
  m.value = 0.5 * x.dot(q_ * x) + 0.5 * u.dot(r_ * u);
  m.dx = q_ * x;
  m.du = r_ * u;
  m.dxx = q_;
  m.duu = r_;
  m.dux = Matrix::Zero(u.size(), x.size());
  return m;
}

QuadraticModel LinearQuadraticOcp::terminal_cost(const Vector& x) const {
  QuadraticModel m;
  m.value = 0.5 * x.dot(qf_ * x);
  m.dx = qf_ * x;
  m.dxx = qf_;
  return m;
}

std::vector<QuadraticModel> LinearQuadraticOcp::inequalities(const Vector& x, const Vector& u,
                                                             int /*node*/) const {
  std::vector<QuadraticModel> out;
  if (!u_min_) {
    return out;
  }
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    QuadraticModel h;
    h.value = u(i) - (*u_min_)(i);
    h.dx = Vector::Zero(x.size());
    h.du = Vector::Unit(u.size(), i);
    h.dxx = Matrix::Zero(x.size(), x.size());
    h.duu = Matrix::Zero(u.size(), u.size());
    h.dux = Matrix::Zero(u.size(), x.size());
    out.push_back(std::move(h));
  }
  return out;
}

Vector LinearQuadraticOcp::inequality_values(const Vector& /*x*/, const Vector& u,
                                             int /*node*/) const {
  if (!u_min_) {
    return Vector();
  }
  return u - *u_min_;
}

DiscreteSystem zoh_discretize(const Matrix& a, const Matrix& b, double dt) {
  const Eigen::Index n = a.rows(), m = b.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = a * dt;
  aug.topRightCorner(n, m) = b * dt;
  const Matrix e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

double discrete_lqr_cost(const DiscreteSystem& sys, const Matrix& q, const Matrix& r,
                         const Matrix& qf, const Vector& x0, int steps, double dt) {
  Matrix p = qf;
  const Matrix qd = dt * q;
  const Matrix rd = dt * r;
  for (int k = 0; k < steps; ++k) {
    const Matrix bp = sys.b.transpose() * p;
    const Matrix gain = (rd + bp * sys.b).ldlt().solve(bp * sys.a);
    p = qd + sys.a.transpose() * p * (sys.a - sys.b * gain);
    p = 0.5 * (p + p.transpose());
  }
  return 0.5 * x0.dot(p * x0);
}

LinearQuadraticOcp double_integrator_problem(double horizon, double dt) {
  Matrix a(2, 2);
  a << 0.0, 1.0, 0.0, 0.0;
  Matrix b(2, 1);
  b << 0.0, 1.0;
  Matrix q = Eigen::Vector2d(10.0, 1.0).asDiagonal();
  Matrix r = Matrix::Identity(1, 1) * 0.1;
  Matrix qf = Eigen::Vector2d(100.0, 10.0).asDiagonal();
  Vector x0(2);
  x0 << 1.0, -0.5;
  return LinearQuadraticOcp(a, b, q, r, qf, x0, horizon, dt);
}

LinearQuadraticOcp bounded_mass_problem(double u_min) {
  Matrix a(2, 2);
  a << 0.0, 1.0, 0.0, 0.0;
  Matrix b(2, 1);
  b << 0.0, 1.0;
  Matrix q = Eigen::Vector2d(10.0, 1.0).asDiagonal();
  Matrix r = Matrix::Identity(1, 1) * 0.1;
  Matrix qf = Eigen::Vector2d(100.0, 10.0).asDiagonal();
  Vector x0(2);
  x0 << 1.0, 0.0;
  LinearQuadraticOcp ocp(a, b, q, r, qf, x0, 0.3, 0.1);
  ocp.set_input_lower_bound(Vector::Constant(1, u_min));
  return ocp;
}

namespace {

double held_input_cost(const LinearQuadraticOcp& ocp, const std::vector<DiscreteSystem>& systems,
                       const std::vector<Vector>& inputs) {
  double cost = 0.0;
  Vector x = ocp.initial_state();
  for (int k = 0; k < ocp.num_intervals(); ++k) {
    const double dt = ocp.interval(k);
    const Vector& u = inputs[k];
    cost += dt * 0.5 * (x.dot(ocp.q() * x) + u.dot(ocp.r() * u));
    x = systems[k].a * x + systems[k].b * u;
  }
  return cost + 0.5 * x.dot(ocp.qf() * x);
}

std::vector<DiscreteSystem> discretize_grid(const LinearQuadraticOcp& ocp) {
  std::vector<DiscreteSystem> systems;
  for (int k = 0; k < ocp.num_intervals(); ++k) {
    systems.push_back(zoh_discretize(ocp.a(), ocp.b(), ocp.interval(k)));
  }
  return systems;
}

}  // namespace

double transcription_cost(const LinearQuadraticOcp& ocp, const std::vector<Vector>& inputs) {
  return held_input_cost(ocp, discretize_grid(ocp), inputs);
}

BruteForceResult brute_force_transcription(const LinearQuadraticOcp& ocp, double lo, double hi,
                                           int points, int levels) {
  const int n = ocp.num_intervals();
  const std::vector<DiscreteSystem> systems = discretize_grid(ocp);
  std::vector<double> center(n, 0.5 * (lo + hi));
  double half = 0.5 * (hi - lo);
  BruteForceResult best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<Vector> trial(n, Vector(1));
  std::vector<int> idx(n, 0);
  for (int level = 0; level < levels; ++level) {
    const double step = 2.0 * half / (points - 1);
    std::fill(idx.begin(), idx.end(), 0);
    std::vector<double> next = center;
    while (true) {
      bool valid = true;
      for (int k = 0; k < n; ++k) {
        const double u = center[k] - half + idx[k] * step;
        valid = valid && u >= lo - 1e-12 && u <= hi + 1e-12;
        trial[k](0) = std::clamp(u, lo, hi);
      }
      if (valid) {
        const double c = held_input_cost(ocp, systems, trial);
        if (c < best.cost) {
          best.cost = c;
          best.inputs = trial;
          for (int k = 0; k < n; ++k) {
            next[k] = trial[k](0);
          }
        }
      }
      int k = 0;
      while (k < n && ++idx[k] == points) {
        idx[k++] = 0;
      }
      if (k == n) {
        break;
      }
    }
    center = next;
    half = 2.0 * step;
  }
  return best;
}

}  // namespace wbmpc::cli
