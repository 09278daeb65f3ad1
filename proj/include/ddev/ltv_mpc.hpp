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
#ifndef DDEV_LTV_MPC_HPP_
#define DDEV_LTV_MPC_HPP_

// Linear time-varying MPC for front-wheel steering.
//
// The prediction model is the small-angle single-track model with linear
// tires and state x = [vy, vx, phi, phi_dot, Y, X, beta], input u = delta_f
// and output eta = [phi + beta, Y]. Each step it is linearized about the
// current state and previous command, discretized by forward Euler, written
// in increment form x~ = [x; u_prev], condensed into Psi/Theta and solved as
// a QP over [dU; eps] where eps softens the steer-angle bounds.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ddev/qp_solver.hpp"
#include "ddev/vehicle_plant.hpp"

namespace ddev
{

inline constexpr int kNx = 7;
inline constexpr int kNy = 2;

enum PredictionIndex : int { kIdxVy = 0, kIdxVx, kIdxPhi, kIdxPhiDot, kIdxY, kIdxX, kIdxBeta };

using StateVector = Eigen::Matrix<double, kNx, 1>;
using StateMatrix = Eigen::Matrix<double, kNx, kNx>;
using InputVector = Eigen::Matrix<double, kNx, 1>;
using OutputMatrix = Eigen::Matrix<double, kNy, kNx>;

struct MpcConfig
{
  int Np = 30;
  int Nc = 10;
  double T = 0.05;
  double Q_theta = 2000.0;
  double Q_y = 100.0;
  double R_delta = 1500.0;
  double rho = 1000.0;
  double u_min = -0.44;
  double u_max = 0.44;
  double du_min = -0.015;
  double du_max = 0.015;
  // Floor on the linearization speed. Below about 4 m/s the Euler step at
  // T = 0.05 s is expansive for the default vehicle and the QP turns singular.
  double v_min_prediction = 4.0;

  void validate() const
  {
    if (!(Nc >= 1 && Nc <= Np)) throw std::invalid_argument("MpcConfig: need 1 <= Nc <= Np");
    if (!(T > 0.0)) throw std::invalid_argument("MpcConfig: T must be > 0");
    if (!(Q_theta >= 0.0 && Q_y >= 0.0 && R_delta >= 0.0)) {
      throw std::invalid_argument("MpcConfig: weights must be >= 0");
    }
    if (!(rho > 0.0)) throw std::invalid_argument("MpcConfig: rho must be > 0");
    if (!(u_min < u_max)) throw std::invalid_argument("MpcConfig: u_min < u_max required");
    if (!(du_min < 0.0 && du_max > 0.0)) {
      throw std::invalid_argument("MpcConfig: du_min < 0 < du_max required");
    }
    if (!(v_min_prediction >= 0.0)) throw std::invalid_argument("MpcConfig: v_min_prediction must be >= 0");
  }
};

/// Exogenous wheel slip ratios held constant over the horizon.
struct SlipRatios
{
  double front = 0.0;
  double rear = 0.0;
};

inline StateVector to_prediction_state(const PlantState & s)
{
  StateVector x;
  x << s.vy, s.vx, s.phi, s.phi_dot, s.Y, s.X, s.vx != 0.0 ? s.vy / s.vx : 0.0;
  return x;
}

/// Right-hand side of the single-track prediction model.
inline StateVector prediction_model_rhs(
  const StateVector & x, double delta_f, const VehicleParams & p, const SlipRatios & slip = {})
{
  const double vy = x(kIdxVy), vx = x(kIdxVx), phi = x(kIdxPhi), r = x(kIdxPhiDot);
  const double alpha_f = (vy + p.a * r) / vx - delta_f;
  const double alpha_r = (vy - p.b * r) / vx;
  const double lateral = p.Caf * alpha_f + p.Car * alpha_r;
  StateVector f;
  f(kIdxVy) = -vx * r + 2.0 / p.m * lateral;
  // Front lateral force projected on the body x axis: -Fyf * delta_f.
  f(kIdxVx) = vy * r + 2.0 / p.m * (p.Clf * slip.front - p.Caf * alpha_f * delta_f + p.Clr * slip.rear);
  f(kIdxPhi) = r;
  f(kIdxPhiDot) = 2.0 / p.Iz * (p.a * p.Caf * alpha_f - p.b * p.Car * alpha_r);
  f(kIdxY) = vx * std::sin(phi) + vy * std::cos(phi);
  f(kIdxX) = vx * std::cos(phi) - vy * std::sin(phi);
  f(kIdxBeta) = 2.0 / (p.m * vx) * lateral - r;
  return f;
}

struct LinearizedModel
{
  StateMatrix A_c = StateMatrix::Zero();
  InputVector B_c = InputVector::Zero();
  StateMatrix A_d = StateMatrix::Identity();
  InputVector B_d = InputVector::Zero();
  OutputMatrix C = OutputMatrix::Zero();
  // f(x0, u0) - A_c x0 - B_c u0: the affine part of the first-order expansion.
  StateVector offset_c = StateVector::Zero();
  StateVector offset_d = StateVector::Zero();
};

inline OutputMatrix output_matrix()
{
  OutputMatrix C = OutputMatrix::Zero();
  C(0, kIdxPhi) = 1.0;
  C(0, kIdxBeta) = 1.0;
  C(1, kIdxY) = 1.0;
  return C;
}

/// Analytic Jacobians of the prediction model about (x0, u0).
inline LinearizedModel linearize_at(
  const StateVector & x0, double u0, const VehicleParams & p, const SlipRatios & slip = {})
{
  const double vy = x0(kIdxVy), vx = x0(kIdxVx), phi = x0(kIdxPhi), r = x0(kIdxPhiDot);
  require_speed(vx, 0.5, "linearize_at");

  const double Cf = p.Caf, Cr = p.Car, m = p.m, Iz = p.Iz, a = p.a, b = p.b;
  const double alpha_f = (vy + a * r) / vx - u0;
  const double alpha_r = (vy - b * r) / vx;
  const double lateral = Cf * alpha_f + Cr * alpha_r;

  // Partials of the slip angles.
  const double daf_dvy = 1.0 / vx, dar_dvy = 1.0 / vx;
  const double daf_dvx = -(vy + a * r) / (vx * vx), dar_dvx = -(vy - b * r) / (vx * vx);
  const double daf_dr = a / vx, dar_dr = -b / vx;
  const double daf_du = -1.0;

  const double dlat_dvy = Cf * daf_dvy + Cr * dar_dvy;
  const double dlat_dvx = Cf * daf_dvx + Cr * dar_dvx;
  const double dlat_dr = Cf * daf_dr + Cr * dar_dr;

  LinearizedModel lm;
  StateMatrix & A = lm.A_c;
  InputVector & B = lm.B_c;

  A(kIdxVy, kIdxVy) = 2.0 / m * dlat_dvy;
  A(kIdxVy, kIdxVx) = -r + 2.0 / m * dlat_dvx;
  A(kIdxVy, kIdxPhiDot) = -vx + 2.0 / m * dlat_dr;
  B(kIdxVy) = 2.0 / m * Cf * daf_du;

  A(kIdxVx, kIdxVy) = r - 2.0 / m * Cf * u0 * daf_dvy;
  A(kIdxVx, kIdxVx) = -2.0 / m * Cf * u0 * daf_dvx;
  A(kIdxVx, kIdxPhiDot) = vy - 2.0 / m * Cf * u0 * daf_dr;
  B(kIdxVx) = -2.0 / m * Cf * (alpha_f + u0 * daf_du);

  A(kIdxPhi, kIdxPhiDot) = 1.0;

  A(kIdxPhiDot, kIdxVy) = 2.0 / Iz * (a * Cf * daf_dvy - b * Cr * dar_dvy);
  A(kIdxPhiDot, kIdxVx) = 2.0 / Iz * (a * Cf * daf_dvx - b * Cr * dar_dvx);
  A(kIdxPhiDot, kIdxPhiDot) = 2.0 / Iz * (a * Cf * daf_dr - b * Cr * dar_dr);
  B(kIdxPhiDot) = 2.0 / Iz * a * Cf * daf_du;

  const double c = std::cos(phi), s = std::sin(phi);
  A(kIdxY, kIdxVy) = c;
  A(kIdxY, kIdxVx) = s;
  A(kIdxY, kIdxPhi) = vx * c - vy * s;

  A(kIdxX, kIdxVy) = -s;
  A(kIdxX, kIdxVx) = c;
  A(kIdxX, kIdxPhi) = -vx * s - vy * c;

  const double k = 2.0 / (m * vx);
  A(kIdxBeta, kIdxVy) = k * dlat_dvy;
  A(kIdxBeta, kIdxVx) = -2.0 / (m * vx * vx) * lateral + k * dlat_dvx;
  A(kIdxBeta, kIdxPhiDot) = k * dlat_dr - 1.0;
  B(kIdxBeta) = k * Cf * daf_du;

  lm.C = output_matrix();
  lm.offset_c = prediction_model_rhs(x0, u0, p, slip) - A * x0 - B * u0;
  return lm;
}

/// Forward-Euler discretization: A_d = I + T A_c, B_d = T B_c.
inline void discretize(LinearizedModel & lm, double T)
{
  if (!(T > 0.0)) throw std::invalid_argument("discretize: T must be > 0");
  lm.A_d = StateMatrix::Identity() + T * lm.A_c;
  lm.B_d = T * lm.B_c;
  lm.offset_d = T * lm.offset_c;
}

struct AugmentedModel
{
  Eigen::Matrix<double, kNx + 1, kNx + 1> A_tilde;
  Eigen::Matrix<double, kNx + 1, 1> B_tilde;
  Eigen::Matrix<double, kNy, kNx + 1> C_tilde;
  Eigen::Matrix<double, kNx + 1, 1> offset_tilde;
};

inline AugmentedModel augment(const LinearizedModel & lm)
{
  AugmentedModel aug;
  aug.A_tilde.setZero();
  aug.A_tilde.topLeftCorner<kNx, kNx>() = lm.A_d;
  aug.A_tilde.topRightCorner<kNx, 1>() = lm.B_d;
  aug.A_tilde(kNx, kNx) = 1.0;
  aug.B_tilde.head<kNx>() = lm.B_d;
  aug.B_tilde(kNx) = 1.0;
  aug.C_tilde.setZero();
  aug.C_tilde.leftCols<kNx>() = lm.C;
  aug.offset_tilde.setZero();
  aug.offset_tilde.head<kNx>() = lm.offset_d;
  return aug;
}

struct PredictionMatrices
{
  Eigen::MatrixXd Psi;    // (kNy Np) x (kNx + 1)
  Eigen::MatrixXd Theta;  // (kNy Np) x Nc
  int Np = 0;
  int Nc = 0;
};

/// Condensed output prediction Y = Psi x~ + Theta dU. Increments beyond the
/// control horizon are zero, which holds the input at its last value.
inline PredictionMatrices build_prediction(const AugmentedModel & aug, int Np, int Nc)
{
  if (!(Nc >= 1 && Nc <= Np)) throw std::invalid_argument("build_prediction: need 1 <= Nc <= Np");
  // powers[k] = C~ A~^k
  std::vector<Eigen::Matrix<double, kNy, kNx + 1>> powers(static_cast<std::size_t>(Np) + 1);
  powers[0] = aug.C_tilde;
  for (int k = 1; k <= Np; ++k) powers[k] = powers[k - 1] * aug.A_tilde;

  PredictionMatrices pm;
  pm.Np = Np;
  pm.Nc = Nc;
  pm.Psi.resize(kNy * Np, kNx + 1);
  pm.Theta = Eigen::MatrixXd::Zero(kNy * Np, Nc);
  for (int i = 1; i <= Np; ++i) {
    pm.Psi.middleRows<kNy>(kNy * (i - 1)) = powers[i];
    for (int j = 1; j <= std::min(i, Nc); ++j) {
      pm.Theta.block<kNy, 1>(kNy * (i - 1), j - 1) = powers[i - j] * aug.B_tilde;
    }
  }
  return pm;
}

/// Stacked output response to the constant affine term of the linearization.
inline Eigen::VectorXd offset_response(const AugmentedModel & aug, int Np)
{
  Eigen::VectorXd out(kNy * Np);
  Eigen::Matrix<double, kNx + 1, 1> acc = Eigen::Matrix<double, kNx + 1, 1>::Zero();
  for (int i = 1; i <= Np; ++i) {
    acc = aug.A_tilde * acc + aug.offset_tilde;
    out.segment<kNy>(kNy * (i - 1)) = aug.C_tilde * acc;
  }
  return out;
}

/// QP over z = [dU; eps] with rows ordered: dU <= du_max, -dU <= -du_min,
/// u_prev + L dU - eps <= u_max, -(u_prev + L dU) - eps <= -u_min, -eps <= 0.
/// Rows whose bound is not finite are dropped.
struct MpcQp
{
  QpProblem qp;
  Eigen::VectorXd z0;  // feasible start
  int Nc = 0;
};

inline MpcQp build_qp(
  const PredictionMatrices & pred, const Eigen::VectorXd & x_tilde0,
  const Eigen::VectorXd & reference, const MpcConfig & cfg,
  const Eigen::VectorXd & free_offset = Eigen::VectorXd())
{
  const int Np = pred.Np;
  const int Nc = pred.Nc;
  if (reference.size() != kNy * Np) throw std::invalid_argument("build_qp: reference must have 2*Np entries");
  if (x_tilde0.size() != kNx + 1) throw std::invalid_argument("build_qp: x_tilde0 must have 8 entries");

  Eigen::VectorXd q_diag(kNy * Np);
  for (int i = 0; i < Np; ++i) {
    q_diag(kNy * i) = cfg.Q_theta;
    q_diag(kNy * i + 1) = cfg.Q_y;
  }
  Eigen::VectorXd error = pred.Psi * x_tilde0 - reference;
  if (free_offset.size() == error.size()) error += free_offset;

  const Eigen::MatrixXd qtheta = q_diag.asDiagonal() * pred.Theta;
  MpcQp out;
  out.Nc = Nc;
  QpProblem & qp = out.qp;
  qp.H = Eigen::MatrixXd::Zero(Nc + 1, Nc + 1);
  qp.H.topLeftCorner(Nc, Nc) = 2.0 * (pred.Theta.transpose() * qtheta);
  qp.H.topLeftCorner(Nc, Nc).diagonal().array() += 2.0 * cfg.R_delta;
  qp.H(Nc, Nc) = 2.0 * cfg.rho;
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  // Factor H from its least-squares stack. At low speed the Euler prediction
  // grows geometrically and forming Theta' Q Theta loses the R directions.
  {
    Eigen::MatrixXd stack = Eigen::MatrixXd::Zero(kNy * Np + Nc + 1, Nc + 1);
    stack.topLeftCorner(kNy * Np, Nc) = (2.0 * q_diag).cwiseSqrt().asDiagonal() * pred.Theta;
    stack.block(kNy * Np, 0, Nc, Nc).diagonal().setConstant(std::sqrt(2.0 * cfg.R_delta));
    stack(kNy * Np + Nc, Nc) = std::sqrt(2.0 * cfg.rho);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(stack);
    qp.H_factor = qr.matrixQR().topRows(Nc + 1).triangularView<Eigen::Upper>();
  }
  qp.g = Eigen::VectorXd::Zero(Nc + 1);
  qp.g.head(Nc) = 2.0 * qtheta.transpose() * error;

  const double u_prev = x_tilde0(kNx);
  std::vector<std::pair<Eigen::RowVectorXd, double>> rows;
  auto add = [&](Eigen::RowVectorXd a, double rhs) {
    if (std::isfinite(rhs)) rows.emplace_back(std::move(a), rhs);
  };
  for (int i = 0; i < Nc; ++i) {
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(Nc + 1);
    a(i) = 1.0;
    add(a, cfg.du_max);
  }
  for (int i = 0; i < Nc; ++i) {
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(Nc + 1);
    a(i) = -1.0;
    add(a, -cfg.du_min);
  }
  for (int i = 0; i < Nc; ++i) {
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(Nc + 1);
    a.head(i + 1).setOnes();
    a(Nc) = -1.0;
    add(a, cfg.u_max - u_prev);
  }
  for (int i = 0; i < Nc; ++i) {
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(Nc + 1);
    a.head(i + 1).setConstant(-1.0);
    a(Nc) = -1.0;
    add(a, u_prev - cfg.u_min);
  }
  {
    Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(Nc + 1);
    a(Nc) = -1.0;
    add(a, 0.0);
  }
  qp.A_in.resize(static_cast<Eigen::Index>(rows.size()), Nc + 1);
  qp.b_in.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    qp.A_in.row(static_cast<Eigen::Index>(k)) = rows[k].first;
    qp.b_in(static_cast<Eigen::Index>(k)) = rows[k].second;
  }
  qp.A_eq.resize(0, Nc + 1);
  qp.b_eq.resize(0);

  out.z0 = Eigen::VectorXd::Zero(Nc + 1);
  double excess = 0.0;
  if (std::isfinite(cfg.u_max)) excess = std::max(excess, u_prev - cfg.u_max);
  if (std::isfinite(cfg.u_min)) excess = std::max(excess, cfg.u_min - u_prev);
  out.z0(Nc) = excess;
  return out;
}

enum class MpcStatus { kSolved, kInfeasibleFallback };

struct QpSolution
{
  Eigen::VectorXd dU;
  double eps = 0.0;
  double objective = 0.0;
  std::vector<Eigen::Index> active_set;
  MpcStatus status = MpcStatus::kSolved;
  int iterations = 0;
  KktResiduals kkt;
  double stationarity_scale = 1.0;  // max(1, |g|_inf, |H|_inf |z|_inf)
};

inline QpSolution solve_mpc_qp(const MpcQp & problem, const QpSettings & settings = {})
{
  const QpResult r = solve_qp(problem.qp, problem.z0, settings);
  QpSolution sol;
  sol.iterations = r.iterations;
  sol.kkt = r.kkt;
  sol.active_set = r.active_set;
  sol.objective = r.objective;
  sol.stationarity_scale = std::max(
    {1.0, problem.qp.g.cwiseAbs().maxCoeff(),
     problem.qp.H.cwiseAbs().rowwise().sum().maxCoeff() * r.z.cwiseAbs().maxCoeff()});
  if (r.status != QpStatus::kSolved) {
    sol.status = MpcStatus::kInfeasibleFallback;
    sol.dU = Eigen::VectorXd::Zero(problem.Nc);
    sol.eps = 0.0;
    return sol;
  }
  sol.dU = r.z.head(problem.Nc);
  sol.eps = r.z(problem.Nc);
  return sol;
}

struct ReferencePoint
{
  double theta = 0.0;  // path tangent angle, rad
  double Y = 0.0;      // m
};

struct MpcStepResult
{
  double command = 0.0;
  QpSolution solution;
};

/// One receding-horizon step: returns u_prev + dU(0), clamped to the steer
/// bounds. On solver failure the previous command is held. The model is
/// linearized at max(vx, v_min_prediction); the prediction starts from the
/// measured state.
inline MpcStepResult mpc_step(
  const PlantState & state, double u_prev, const std::vector<ReferencePoint> & window,
  const MpcConfig & cfg, const VehicleParams & params, const SlipRatios & slip = {})
{
  if (static_cast<int>(window.size()) != cfg.Np) {
    throw std::invalid_argument("mpc_step: reference window must hold Np points");
  }
  const StateVector x0 = to_prediction_state(state);
  StateVector x_lin = x0;
  if (x_lin(kIdxVx) < cfg.v_min_prediction) {
    x_lin(kIdxVx) = cfg.v_min_prediction;
    x_lin(kIdxBeta) = x_lin(kIdxVy) / x_lin(kIdxVx);
  }
  LinearizedModel lm = linearize_at(x_lin, u_prev, params, slip);
  discretize(lm, cfg.T);
  const AugmentedModel aug = augment(lm);
  const PredictionMatrices pred = build_prediction(aug, cfg.Np, cfg.Nc);

  Eigen::VectorXd x_tilde(kNx + 1);
  x_tilde << x0, u_prev;
  Eigen::VectorXd ref(kNy * cfg.Np);
  for (int i = 0; i < cfg.Np; ++i) {
    ref(kNy * i) = window[static_cast<std::size_t>(i)].theta;
    ref(kNy * i + 1) = window[static_cast<std::size_t>(i)].Y;
  }
  const MpcQp problem = build_qp(pred, x_tilde, ref, cfg, offset_response(aug, cfg.Np));

  MpcStepResult out;
  out.solution = solve_mpc_qp(problem);
  if (out.solution.status != MpcStatus::kSolved) {
    out.command = u_prev;
    return out;
  }
  out.command = std::clamp(u_prev + out.solution.dU(0), cfg.u_min, cfg.u_max);
  return out;
}

}  // namespace ddev

#endif  // DDEV_LTV_MPC_HPP_
