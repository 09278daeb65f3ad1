// Copyright 2026 The ddev-control Authors
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
#ifndef DDEV_TORQUE_ALLOCATION_HPP_
#define DDEV_TORQUE_ALLOCATION_HPP_

// Four-wheel torque allocation minimizing tire adhesion utilization
//
//   min  sum_ij (T_ij / r)^2 / (mu Fz_ij)^2
//   s.t. (1/r) [1 1 1 1; -d/2 d/2 -d/2 d/2] T = [Fx_total; Mz]
//        |T_ij| <= min(mu Fz_ij r, Tmax)
//
// Demands outside the attainable set are scaled down, keeping Fx:Mz fixed.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ddev/qp_solver.hpp"
#include "ddev/vehicle_plant.hpp"

namespace ddev
{

struct AllocationProblem
{
  double Fx_total = 0.0;  // N
  double Mz = 0.0;        // N m
  PerWheel<double> Fz{0.0, 0.0, 0.0, 0.0};
  double mu = 0.6;
  double r = 0.3;
  double d = 1.6;
  double Tmax = 300.0;

  void validate() const
  {
    for (double fz : Fz) {
      if (!(fz > 0.0)) throw std::invalid_argument("AllocationProblem: every Fz must be > 0");
    }
    if (!(r > 0.0 && d > 0.0 && mu > 0.0 && Tmax > 0.0)) {
      throw std::invalid_argument("AllocationProblem: r, d, mu, Tmax must be > 0");
    }
  }

  Eigen::Matrix<double, 2, 4> effectiveness() const
  {
    Eigen::Matrix<double, 2, 4> A;
    A << 1.0, 1.0, 1.0, 1.0, -0.5 * d, 0.5 * d, -0.5 * d, 0.5 * d;
    return A / r;
  }
};

enum class AllocationStatus { kExact, kScaled };

struct WheelTorques
{
  PerWheel<double> T{0.0, 0.0, 0.0, 0.0};  // fl, fr, rl, rr
  AllocationStatus status = AllocationStatus::kExact;
  double scale = 1.0;               // applied demand scale factor
  double objective = 0.0;           // sum of squared adhesion utilization
  double equality_residual = 0.0;   // |A T - scale N|_inf
  int iterations = 0;
};

/// Per-wheel bound min(mu Fz r, Tmax) in torque units.
inline PerWheel<double> torque_bounds(const PerWheel<double> & Fz, double mu, double r, double Tmax)
{
  PerWheel<double> b{};
  for (std::size_t i = 0; i < 4; ++i) b[i] = std::min(mu * Fz[i] * r, Tmax);
  return b;
}

inline double adhesion_utilization(const AllocationProblem & pb, const PerWheel<double> & T)
{
  double j = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double u = (T[i] / pb.r) / (pb.mu * pb.Fz[i]);
    j += u * u;
  }
  return j;
}

inline WheelTorques allocate(const AllocationProblem & pb)
{
  pb.validate();
  const auto bound = torque_bounds(pb.Fz, pb.mu, pb.r, pb.Tmax);

  // Left/right torque sums are fixed by the two equality rows.
  const double total = pb.Fx_total * pb.r;
  const double diff = 2.0 * pb.Mz * pb.r / pb.d;
  const double left = 0.5 * (total - diff);
  const double right = 0.5 * (total + diff);
  const double cap_left = bound[kFrontLeft] + bound[kRearLeft];
  const double cap_right = bound[kFrontRight] + bound[kRearRight];

  WheelTorques out;
  double scale = 1.0;
  if (std::abs(left) > cap_left) scale = std::min(scale, cap_left / std::abs(left));
  if (std::abs(right) > cap_right) scale = std::min(scale, cap_right / std::abs(right));
  if (scale < 1.0) out.status = AllocationStatus::kScaled;
  out.scale = scale;

  // Feasible start: split each side in proportion to its bounds.
  Eigen::Vector4d t0;
  t0(kFrontLeft) = scale * left * bound[kFrontLeft] / cap_left;
  t0(kRearLeft) = scale * left * bound[kRearLeft] / cap_left;
  t0(kFrontRight) = scale * right * bound[kFrontRight] / cap_right;
  t0(kRearRight) = scale * right * bound[kRearRight] / cap_right;

  // Normalized weights (argmin is invariant to a common factor).
  Eigen::Vector4d w;
  Eigen::Vector4d cap;
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = pb.mu * pb.Fz[i] * pb.r;
    w(static_cast<Eigen::Index>(i)) = 1.0 / (c * c);
    cap(static_cast<Eigen::Index>(i)) = bound[i];
  }
  w /= w.maxCoeff();

  QpProblem qp;
  qp.H = 2.0 * w.asDiagonal().toDenseMatrix();
  qp.g = Eigen::VectorXd::Zero(4);
  // Equality rows in torque units: sum T = scale*total, right - left = scale*diff.
  qp.A_eq.resize(2, 4);
  qp.A_eq << 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0;
  qp.b_eq.resize(2);
  qp.b_eq << scale * total, scale * diff;
  qp.A_in.resize(8, 4);
  qp.A_in.setZero();
  qp.b_in.resize(8);
  for (Eigen::Index i = 0; i < 4; ++i) {
    qp.A_in(i, i) = 1.0;
    qp.b_in(i) = cap(i);
    qp.A_in(4 + i, i) = -1.0;
    qp.b_in(4 + i) = cap(i);
  }
  // Pull the start onto the box exactly (it is feasible up to rounding).
  t0 = t0.cwiseMax(-cap).cwiseMin(cap);
  QpSettings settings;
  settings.feasibility_tol = 1e-7;
  const QpResult res = solve_qp(qp, t0, settings);
  const Eigen::VectorXd t = res.status == QpStatus::kSolved ? res.z : Eigen::VectorXd(t0);

  for (std::size_t i = 0; i < 4; ++i) {
    out.T[i] = std::clamp(t(static_cast<Eigen::Index>(i)), -bound[i], bound[i]);
  }
  out.iterations = res.iterations;
  out.objective = adhesion_utilization(pb, out.T);
  const Eigen::Vector4d tv(out.T[0], out.T[1], out.T[2], out.T[3]);
  const Eigen::Vector2d demand(scale * pb.Fx_total, scale * pb.Mz);
  out.equality_residual = (pb.effectiveness() * tv - demand).cwiseAbs().maxCoeff();
  return out;
}

/// Unconstrained weighted pseudo-inverse u = W^-1 A' (A W^-1 A')^-1 N.
inline PerWheel<double> weighted_pseudo_inverse(const AllocationProblem & pb)
{
  Eigen::Vector4d winv;
  for (std::size_t i = 0; i < 4; ++i) {
    const double c = pb.mu * pb.Fz[i] * pb.r;
    winv(static_cast<Eigen::Index>(i)) = c * c;
  }
  const Eigen::Matrix<double, 2, 4> A = pb.effectiveness();
  const Eigen::Matrix<double, 4, 2> WA = winv.asDiagonal() * A.transpose();
  const Eigen::Matrix2d S = A * WA;
  const Eigen::Vector4d u = WA * S.ldlt().solve(Eigen::Vector2d(pb.Fx_total, pb.Mz));
  return {u(0), u(1), u(2), u(3)};
}

}  // namespace ddev

#endif  // DDEV_TORQUE_ALLOCATION_HPP_
