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

#ifndef DDEV_HARNESS_ENVELOPE_FIT_HPP_
#define DDEV_HARNESS_ENVELOPE_FIT_HPP_

// Fits the phase-plane envelope |B1*beta_dot + B2*beta| <= 1 to the region of
// attraction of the nonlinear 2-DOF model (brush tires, static axle loads,
// zero steer, no yaw moment).
//
// For each initial yaw rate r0 > 0 on a grid, the stability boundary in beta0
// is located by bisection. Boundary points where the state is moving outward
// (beta_dot and beta share a sign) are kept, and (B1, B2) is the least-squares
// solution of B1*beta_dot + B2*beta = -1 over them. The mirror side follows by
// symmetry.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ddev/vehicle_plant.hpp"

namespace ddev::harness
{

struct EnvelopeFitOptions
{
  double vx = 20.0;            // m/s
  double mu = 0.6;
  double horizon = 6.0;        // s of simulation per probe
  double dt = 2e-3;            // s
  double diverge_beta = 0.6;   // rad; leaving this band counts as unstable
  double settle_beta = 0.02;   // rad; must end inside this band to count as stable
  double beta_search = 0.5;    // rad; bisection bracket is [-beta_search, beta_search]
  int bisection_steps = 30;
  int yaw_rate_samples = 40;
  double yaw_rate_lo = 0.5;    // grid in units of mu*g/vx
  double yaw_rate_hi = 3.0;
};

struct EnvelopePoint
{
  double beta = 0.0;
  double beta_dot = 0.0;
  double phi_dot = 0.0;
};

struct EnvelopeFit
{
  double B1 = 0.0;
  double B2 = 0.0;
  double max_deviation = 0.0;  // max |B1*beta_dot + B2*beta + 1| over the kept points
  std::vector<EnvelopePoint> boundary;
};

namespace detail
{

struct TwoDofNonlinear
{
  const VehicleParams & p;
  double vx;
  double mu;
  double fz_front;
  double fz_rear;

  Eigen::Vector2d operator()(const Eigen::Vector2d & x) const
  {
    const double beta = x(0), r = x(1);
    const double af = beta + p.a * r / vx;
    const double ar = beta - p.b * r / vx;
    const double fyf = 2.0 * brush_lateral_force(af, std::abs(p.Caf), mu, fz_front);
    const double fyr = 2.0 * brush_lateral_force(ar, std::abs(p.Car), mu, fz_rear);
    return {(fyf + fyr) / (p.m * vx) - r, (p.a * fyf - p.b * fyr) / p.Iz};
  }
};

inline bool converges(const TwoDofNonlinear & f, Eigen::Vector2d x, const EnvelopeFitOptions & o)
{
  const int n = static_cast<int>(std::lround(o.horizon / o.dt));
  const double h = o.dt;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d k1 = f(x);
    const Eigen::Vector2d k2 = f(x + 0.5 * h * k1);
    const Eigen::Vector2d k3 = f(x + 0.5 * h * k2);
    const Eigen::Vector2d k4 = f(x + h * k3);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (std::abs(x(0)) > o.diverge_beta) return false;
  }
  return std::abs(x(0)) < o.settle_beta;
}

}  // namespace detail

inline EnvelopeFit fit_envelope(const VehicleParams & p, const EnvelopeFitOptions & o)
{
  p.validate();
  if (!(o.vx > 0.5)) throw std::invalid_argument("fit_envelope: vx must exceed 0.5 m/s");
  if (!(o.mu > 0.0)) throw std::invalid_argument("fit_envelope: mu must be > 0");
  if (o.yaw_rate_samples < 2 || !(o.yaw_rate_hi > o.yaw_rate_lo)) {
    throw std::invalid_argument("fit_envelope: bad yaw-rate grid");
  }
  const double L = p.wheelbase();
  const detail::TwoDofNonlinear f{
    p, o.vx, o.mu, p.m * p.g * p.b / (2.0 * L), p.m * p.g * p.a / (2.0 * L)};

  EnvelopeFit fit;
  const double scale = o.mu * p.g / o.vx;
  for (int i = 0; i < o.yaw_rate_samples; ++i) {
    const double w = static_cast<double>(i) / (o.yaw_rate_samples - 1);
    const double r0 = scale * (o.yaw_rate_lo + w * (o.yaw_rate_hi - o.yaw_rate_lo));
    double unstable = -o.beta_search;
    double stable = o.beta_search;
    if (!detail::converges(f, {stable, r0}, o) || detail::converges(f, {unstable, r0}, o)) {
      continue;  // no boundary inside the bracket for this yaw rate
    }
    for (int k = 0; k < o.bisection_steps; ++k) {
      const double mid = 0.5 * (stable + unstable);
      (detail::converges(f, {mid, r0}, o) ? stable : unstable) = mid;
    }
    const double beta_dot = f({stable, r0})(0);
    if (beta_dot <= 0.0) fit.boundary.push_back({stable, beta_dot, r0});
  }
  if (fit.boundary.size() < 2) {
    throw std::runtime_error("fit_envelope: fewer than two boundary points found");
  }

  Eigen::MatrixXd A(static_cast<Eigen::Index>(fit.boundary.size()), 2);
  for (std::size_t k = 0; k < fit.boundary.size(); ++k) {
    A(static_cast<Eigen::Index>(k), 0) = fit.boundary[k].beta_dot;
    A(static_cast<Eigen::Index>(k), 1) = fit.boundary[k].beta;
  }
  const Eigen::VectorXd rhs = -Eigen::VectorXd::Ones(A.rows());
  const Eigen::Vector2d sol = A.colPivHouseholderQr().solve(rhs);
  fit.B1 = sol(0);
  fit.B2 = sol(1);
  fit.max_deviation = (A * sol - rhs).cwiseAbs().maxCoeff();
  return fit;
}

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_ENVELOPE_FIT_HPP_
