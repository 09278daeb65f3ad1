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
#ifndef DDEV_DYC_HPP_
#define DDEV_DYC_HPP_

// Direct yaw moment control: intervention rule, 2-DOF reference model, LQR
// yaw-moment law with feedforward, and a Newton-Kleinman CARE solver.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ddev/errors.hpp"
#include "ddev/vehicle_plant.hpp"

namespace ddev
{

struct StabilityEnvelope
{
  double yaw_err_threshold = 0.035;  // rad/s
  double B1 = 1.5832;                // s, fitted at 72 km/h, mu 0.6
  double B2 = 10.1312;               // 1/rad
  double hysteresis_off_factor = 0.5;

  void validate() const
  {
    if (!(yaw_err_threshold > 0.0)) throw std::invalid_argument("StabilityEnvelope: threshold must be > 0");
    if (!std::isfinite(B1) || !std::isfinite(B2)) throw std::invalid_argument("StabilityEnvelope: B1, B2 must be finite");
    if (!(hysteresis_off_factor > 0.0 && hysteresis_off_factor < 1.0)) {
      throw std::invalid_argument("StabilityEnvelope: hysteresis_off_factor must lie in (0, 1)");
    }
  }
};

/// Stability rule with hysteresis. Inactive -> active as soon as either the
/// yaw-rate error or the phase-plane term leaves its bound; active -> inactive
/// only once both are inside hysteresis_off_factor times their bound.
inline bool intervention_check(
  double phi_dot, double phi_dot_d, double beta, double beta_dot,
  const StabilityEnvelope & env, bool was_active)
{
  const double yaw_err = std::abs(phi_dot - phi_dot_d);
  const double phase = std::abs(env.B1 * beta_dot + env.B2 * beta);
  if (!was_active) {
    return !(yaw_err <= env.yaw_err_threshold && phase <= 1.0);
  }
  const double h = env.hysteresis_off_factor;
  return !(yaw_err < h * env.yaw_err_threshold && phase < h);
}

inline bool intervention_check(
  const PlantState & s, double phi_dot_d, const StabilityEnvelope & env, double beta_dot,
  bool was_active = false)
{
  return intervention_check(s.phi_dot, phi_dot_d, s.beta, beta_dot, env, was_active);
}

/// xi_dot = A xi + B Mz + C delta_f with xi = [beta, phi_dot].
struct TwoDofModel
{
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
  Eigen::Vector2d C;
};

inline TwoDofModel make_two_dof_model(const VehicleParams & p, double vx)
{
  require_speed(vx, 0.5, "make_two_dof_model");
  const double Cf = p.Caf, Cr = p.Car;
  TwoDofModel md;
  md.A(0, 0) = 2.0 * (Cf + Cr) / (p.m * vx);
  md.A(0, 1) = 2.0 * (p.a * Cf - p.b * Cr) / (p.m * vx * vx) - 1.0;
  md.A(1, 0) = 2.0 * (p.a * Cf - p.b * Cr) / p.Iz;
  md.A(1, 1) = 2.0 * (p.a * p.a * Cf + p.b * p.b * Cr) / (p.Iz * vx);
  md.B << 0.0, 1.0 / p.Iz;
  md.C << -2.0 * Cf / (p.m * vx), -2.0 * p.a * Cf / p.Iz;
  return md;
}

struct YawRateReference
{
  double phi_dot_d = 0.0;    // linear steady-state yaw rate with Mz = 0
  double phi_dot_max = 0.0;  // adhesion limit
  double phi_dot_ref = 0.0;  // sign(d) * min(|d|, max)
};

inline YawRateReference reference_yaw_rate(
  double vx, double delta_f, double mu, const VehicleParams & p)
{
  const TwoDofModel md = make_two_dof_model(p, vx);
  const Eigen::Vector2d xi = md.A.partialPivLu().solve(-md.C * delta_f);
  YawRateReference ref;
  ref.phi_dot_d = xi(1);
  ref.phi_dot_max = 0.85 * mu * p.g / vx;
  const double mag = std::min(std::abs(ref.phi_dot_d), ref.phi_dot_max);
  ref.phi_dot_ref = ref.phi_dot_d > 0.0 ? mag : (ref.phi_dot_d < 0.0 ? -mag : 0.0);
  return ref;
}

namespace detail
{

inline bool is_hurwitz(const Eigen::MatrixXd & A)
{
  if (A.rows() == 0) return true;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  return (es.eigenvalues().real().array() < 0.0).all();
}

/// Solves A' X + X A = -M for X by vectorization (small n only).
inline Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd & A, const Eigen::MatrixXd & M)
{
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
  // vec(A' X) = (I kron A') vec(X); vec(X A) = (A' kron I) vec(X)
  for (Eigen::Index j = 0; j < n; ++j) {
    K.block(j * n, j * n, n, n) += A.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
      K.block(j * n, i * n, n, n) += A(i, j) * Eigen::MatrixXd::Identity(n, n);
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(M.data(), n * n);
  Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

/// PBH test on the closed right half plane.
inline bool is_stabilizable(const Eigen::MatrixXd & A, const Eigen::MatrixXd & B)
{
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  for (Eigen::Index k = 0; k < n; ++k) {
    const std::complex<double> lambda = es.eigenvalues()(k);
    if (lambda.real() < 0.0) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = A.cast<std::complex<double>>() -
                      lambda * Eigen::MatrixXcd::Identity(n, n);
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    const double tol = 1e-10 * std::max(1.0, svd.singularValues()(0));
    if (svd.singularValues()(n - 1) <= tol) return false;
  }
  return true;
}

}  // namespace detail

struct CareSolution
{
  Eigen::MatrixXd P;
  double residual = 0.0;           // Frobenius norm of the Riccati residual
  double relative_residual = 0.0;  // residual / max(1, |Q|, |A' P|)
  int iterations = 0;
};

inline Eigen::MatrixXd care_residual(
  const Eigen::MatrixXd & A, const Eigen::MatrixXd & B, const Eigen::MatrixXd & Q,
  const Eigen::MatrixXd & R, const Eigen::MatrixXd & P)
{
  return A.transpose() * P + P * A + Q - P * B * R.llt().solve(B.transpose()) * P;
}

/// Stabilizing solution of A'P + PA + Q - P B R^-1 B' P = 0 by Newton-Kleinman.
/// The initial gain is zero when A is Hurwitz, otherwise Bass's shifted
/// Lyapunov construction.
inline CareSolution solve_care(
  const Eigen::MatrixXd & A, const Eigen::MatrixXd & B, const Eigen::MatrixXd & Q,
  const Eigen::MatrixXd & R, int max_iterations = 100)
{
  const Eigen::Index n = A.rows();
  if (!detail::is_stabilizable(A, B)) {
    throw RiccatiError("solve_care: (A, B) is not stabilizable", std::numeric_limits<double>::infinity());
  }
  Eigen::LLT<Eigen::MatrixXd> r_llt(R);
  if (r_llt.info() != Eigen::Success) throw std::invalid_argument("solve_care: R must be positive definite");
  const Eigen::MatrixXd Rinv_Bt = r_llt.solve(B.transpose());

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(B.cols(), n);
  if (!detail::is_hurwitz(A)) {
    const double shift = A.norm() + 1.0;
    const Eigen::MatrixXd As = A + shift * Eigen::MatrixXd::Identity(n, n);
    // As Z + Z As' = 2 B B'  <=>  (-As) Z + Z (-As)' = -2 B B'
    const Eigen::MatrixXd Z = detail::solve_lyapunov(-As.transpose(), 2.0 * B * B.transpose());
    K = B.transpose() * Z.completeOrthogonalDecomposition().pseudoInverse();
    if (!detail::is_hurwitz(A - B * K)) {
      throw RiccatiError("solve_care: could not construct a stabilizing initial gain",
                         std::numeric_limits<double>::infinity());
    }
  }

  CareSolution sol;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::MatrixXd Ak = A - B * K;
    const Eigen::MatrixXd Pn = detail::solve_lyapunov(Ak, Q + K.transpose() * R * K);
    const double change = (Pn - P).norm();
    P = Pn;
    K = Rinv_Bt * P;
    sol.iterations = it;
    if (change <= 1e-15 * std::max(1.0, P.norm()) && it > 1) break;
    if (!P.allFinite()) break;
  }
  sol.P = P;
  const Eigen::MatrixXd res = care_residual(A, B, Q, R, P);
  sol.residual = res.norm();
  sol.relative_residual =
    sol.residual / std::max({1.0, Q.norm(), (A.transpose() * P).norm()});
  if (!P.allFinite() || !(sol.relative_residual < 1e-8) || !detail::is_hurwitz(A - B * K)) {
    std::ostringstream os;
    os << "solve_care: Newton-Kleinman did not converge (residual " << sol.residual << ")";
    throw RiccatiError(os.str(), sol.residual);
  }
  return sol;
}

struct LqrWeights
{
  double q_beta = 1000.0;
  double q_phi_dot = 5000.0;
  double r = 1e-5;

  Eigen::Matrix2d Q() const { return Eigen::Vector2d(q_beta, q_phi_dot).asDiagonal(); }
};

struct LqrGains
{
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
  Eigen::RowVector2d K_FB = Eigen::RowVector2d::Zero();
  double K_FF = 0.0;
  bool feedforward = false;  // false: Mz = K_FB (xi - X_d)
  Eigen::Matrix2d Q_lqr = Eigen::Matrix2d::Zero();
  double R_lqr = 1.0;
  double care_residual = 0.0;
  double care_relative_residual = 0.0;
  double vx = 0.0;  // speed the model was built at
};

inline constexpr double kFeedforwardSteerEps = 1e-4;

/// Feedforward gain for a given Riccati solution; returns false when the
/// steer angle is too small for the reference-ratio construction.
inline bool feedforward_gain(
  const TwoDofModel & md, const Eigen::Matrix2d & P, const Eigen::Matrix2d & Q, double R,
  double phi_dot_target, double delta_f, double & k_ff, double delta_eps = kFeedforwardSteerEps)
{
  if (!(std::abs(delta_f) > delta_eps)) return false;
  const Eigen::Vector2d Ad(0.0, phi_dot_target / delta_f);
  const Eigen::Matrix2d bracket = P * md.B * md.B.transpose() / R - md.A.transpose();
  Eigen::FullPivLU<Eigen::Matrix2d> lu(bracket);
  if (!lu.isInvertible()) return false;
  k_ff = (md.B.transpose() / R * lu.solve(Q * Ad - P * md.C))(0);
  return true;
}

inline LqrGains lqr_gains(
  const TwoDofModel & md, const Eigen::Matrix2d & Q, double R, double phi_dot_target,
  double delta_f, double delta_eps = kFeedforwardSteerEps)
{
  const CareSolution care = solve_care(md.A, md.B, Q, Eigen::MatrixXd::Constant(1, 1, R));
  LqrGains g;
  g.P = care.P;
  g.K_FB = -(md.B.transpose() * g.P) / R;
  g.Q_lqr = Q;
  g.R_lqr = R;
  g.care_residual = care.residual;
  g.care_relative_residual = care.relative_residual;
  g.feedforward = feedforward_gain(md, g.P, Q, R, phi_dot_target, delta_f, g.K_FF, delta_eps);
  if (!g.feedforward) g.K_FF = 0.0;
  return g;
}

struct YawMomentCommand
{
  double Mz = 0.0;
  bool active = false;
  double beta_ref = 0.0;
  double phi_dot_ref = 0.0;
};

inline YawMomentCommand yaw_moment_command(
  const PlantState & s, double delta_f, const LqrGains & gains, bool active,
  double phi_dot_ref, double Mz_max)
{
  YawMomentCommand cmd;
  cmd.active = active;
  cmd.phi_dot_ref = phi_dot_ref;
  if (!active) return cmd;
  const Eigen::Vector2d xi(s.beta, s.phi_dot);
  double mz = 0.0;
  if (gains.feedforward) {
    mz = gains.K_FB.dot(xi) + gains.K_FF * delta_f;
  } else {
    mz = gains.K_FB.dot(xi - Eigen::Vector2d(0.0, phi_dot_ref));
  }
  cmd.Mz = std::clamp(mz, -Mz_max, Mz_max);
  return cmd;
}

struct DycConfig
{
  StabilityEnvelope envelope;
  LqrWeights weights;
  double Mz_max = 3000.0;           // N m
  double gain_speed_step = 0.5;     // m/s
  double delta_eps = kFeedforwardSteerEps;

  void validate() const
  {
    envelope.validate();
    if (!(weights.q_beta >= 0.0 && weights.q_phi_dot >= 0.0 && weights.r > 0.0)) {
      throw std::invalid_argument("DycConfig: Q must be PSD and R > 0");
    }
    if (!(Mz_max > 0.0 && gain_speed_step > 0.0 && delta_eps > 0.0)) {
      throw std::invalid_argument("DycConfig: Mz_max, gain_speed_step, delta_eps must be > 0");
    }
  }
};

/// Stateful lower-layer controller: hysteresis bit and a Riccati cache keyed
/// on speed.
class YawMomentController
{
public:
  YawMomentController(DycConfig cfg, VehicleParams params)
  : cfg_(std::move(cfg)), params_(params)
  {
    cfg_.validate();
  }

  struct Output
  {
    YawMomentCommand command;
    YawRateReference reference;
    double yaw_rate_error = 0.0;  // phi_dot - phi_dot_ref
    double care_relative_residual = 0.0;
    bool gains_recomputed = false;
  };

  Output step(const PlantState & s, double delta_f, double beta_dot, double mu)
  {
    Output out;
    out.reference = reference_yaw_rate(s.vx, delta_f, mu, params_);
    out.yaw_rate_error = s.phi_dot - out.reference.phi_dot_ref;
    active_ = intervention_check(s, out.reference.phi_dot_d, cfg_.envelope, beta_dot, active_);

    if (!cached_ || std::abs(s.vx - gains_.vx) >= cfg_.gain_speed_step) {
      const TwoDofModel md = make_two_dof_model(params_, s.vx);
      gains_ = lqr_gains(md, cfg_.weights.Q(), cfg_.weights.r, 0.0, 0.0, cfg_.delta_eps);
      gains_.vx = s.vx;
      cached_ = true;
      out.gains_recomputed = true;
    }
    out.care_relative_residual = gains_.care_relative_residual;

    LqrGains g = gains_;
    const TwoDofModel md = make_two_dof_model(params_, gains_.vx);
    g.feedforward = feedforward_gain(
      md, g.P, g.Q_lqr, g.R_lqr, out.reference.phi_dot_ref, delta_f, g.K_FF, cfg_.delta_eps);
    out.command =
      yaw_moment_command(s, delta_f, g, active_, out.reference.phi_dot_ref, cfg_.Mz_max);
    return out;
  }

  bool active() const noexcept { return active_; }
  const LqrGains & gains() const noexcept { return gains_; }

private:
  DycConfig cfg_;
  VehicleParams params_;
  LqrGains gains_;
  bool cached_ = false;
  bool active_ = false;
};

}  // namespace ddev

#endif  // DDEV_DYC_HPP_
