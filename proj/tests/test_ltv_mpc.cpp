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


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ddev/ltv_mpc.hpp"
#include "ddev/qp_solver.hpp"
#include "oracles.hpp"

using namespace ddev;

namespace
{

const VehicleParams kP{};

StateVector random_state(std::mt19937 & rng)
{
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  StateVector x;
  x(kIdxVx) = 2.0 + 33.0 * (0.5 + 0.5 * U(rng));
  x(kIdxVy) = 1.0 * U(rng);
  x(kIdxPhi) = 3.1 * U(rng);
  x(kIdxPhiDot) = 0.6 * U(rng);
  x(kIdxY) = 5.0 * U(rng);
  x(kIdxX) = 200.0 * U(rng);
  x(kIdxBeta) = x(kIdxVy) / x(kIdxVx);
  return x;
}

}  // namespace

TEST(Linearize, YRowPhiEntryIsSpeed)
{
  StateVector x = StateVector::Zero();
  x(kIdxVx) = 17.0;
  const auto lm = linearize_at(x, 0.0, kP);
  EXPECT_DOUBLE_EQ(lm.A_c(kIdxY, kIdxPhi), 17.0);
}

TEST(Linearize, YawRowInputEntry)
{
  StateVector x = StateVector::Zero();
  x(kIdxVx) = 20.0;
  const auto lm = linearize_at(x, 0.0, kP);
  EXPECT_DOUBLE_EQ(lm.B_c(kIdxPhiDot), -2.0 * kP.a * kP.Caf / kP.Iz);
}

TEST(Linearize, MatchesCentralDifferences)
{
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const oracle::StParams sp{kP.m, kP.Iz, kP.a, kP.b, kP.Caf, kP.Car, kP.Clf, kP.Clr};
  for (int i = 0; i < 500; ++i) {
    const StateVector x = random_state(rng);
    const double u = 0.3 * U(rng);
    const SlipRatios slip{0.05 * U(rng), 0.05 * U(rng)};
    const auto lm = linearize_at(x, u, kP, slip);
    const auto J = oracle::central_jacobian(
      [&](const Eigen::Matrix<double, 7, 1> & xx, double uu) {
        return oracle::single_track_rhs(xx, uu, sp, slip.front, slip.rear);
      },
      x, u);
    Eigen::Matrix<double, 7, 8> got;
    got << lm.A_c, lm.B_c;
    const double rel = (got - J).norm() / J.norm();
    ASSERT_LT(rel, 1e-6) << "state " << i;
  }
}

TEST(Linearize, ModelRhsMatchesIndependentCoding)
{
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const oracle::StParams sp{kP.m, kP.Iz, kP.a, kP.b, kP.Caf, kP.Car, kP.Clf, kP.Clr};
  for (int i = 0; i < 200; ++i) {
    const StateVector x = random_state(rng);
    const double u = 0.3 * U(rng);
    const auto f = prediction_model_rhs(x, u, kP, {0.01, -0.02});
    const auto g = oracle::single_track_rhs(x, u, sp, 0.01, -0.02);
    EXPECT_LT((f - g).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, g.cwiseAbs().maxCoeff()));
  }
}

TEST(Linearize, AffineOffsetReproducesVectorField)
{
  std::mt19937 rng(3);
  const StateVector x = random_state(rng);
  const auto lm = linearize_at(x, 0.1, kP);
  const StateVector f = lm.A_c * x + lm.B_c * 0.1 + lm.offset_c;
  EXPECT_LT((f - prediction_model_rhs(x, 0.1, kP)).norm(), 1e-9);
}

TEST(Linearize, LowSpeedThrows)
{
  StateVector x = StateVector::Zero();
  x(kIdxVx) = 0.2;
  EXPECT_THROW(linearize_at(x, 0.0, kP), DegenerateSpeedError);
}

TEST(Discretize, ForwardEuler)
{
  LinearizedModel lm;
  discretize(lm, 0.05);
  EXPECT_TRUE(lm.A_d.isIdentity());
  lm.A_c.setZero();
  lm.A_c(0, 0) = -2.0;
  discretize(lm, 0.05);
  EXPECT_DOUBLE_EQ(lm.A_d(0, 0), 0.9);
  EXPECT_THROW(discretize(lm, 0.0), std::invalid_argument);
}

TEST(Discretize, SpectralRadiusBound)
{
  std::mt19937 rng(4);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    LinearizedModel lm;
    for (int r = 0; r < kNx; ++r)
      for (int c = 0; c < kNx; ++c) lm.A_c(r, c) = N(rng);
    discretize(lm, 0.05);
    const double rc = lm.A_c.eigenvalues().cwiseAbs().maxCoeff();
    const double rd = lm.A_d.eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_LE(rd, 1.0 + 0.05 * rc + 1e-12);
  }
}

TEST(Augment, ShapeAndUnrolledStep)
{
  std::mt19937 rng(5);
  LinearizedModel lm = linearize_at(random_state(rng), 0.05, kP);
  discretize(lm, 0.05);
  const auto aug = augment(lm);
  EXPECT_EQ(aug.A_tilde.rows(), 8);
  EXPECT_EQ(aug.B_tilde.rows(), 8);
  EXPECT_EQ(aug.C_tilde.cols(), 8);

  const StateVector x = random_state(rng);
  const double u_prev = 0.02, du = -0.01;
  Eigen::Matrix<double, 8, 1> xt;
  xt << x, u_prev;
  const Eigen::Matrix<double, 8, 1> next = aug.A_tilde * xt + aug.B_tilde * du;
  EXPECT_LT((next.head<7>() - (lm.A_d * x + lm.B_d * (u_prev + du))).norm(), 1e-10);
  EXPECT_DOUBLE_EQ(next(7), u_prev + du);
}

TEST(Augment, SpectrumAddsUnitEigenvalue)
{
  std::mt19937 rng(6);
  LinearizedModel lm = linearize_at(random_state(rng), 0.0, kP);
  discretize(lm, 0.05);
  const auto aug = augment(lm);
  Eigen::VectorXcd ea = Eigen::MatrixXd(aug.A_tilde).eigenvalues();
  Eigen::VectorXcd ed = Eigen::MatrixXd(lm.A_d).eigenvalues();
  // Every eigenvalue of A_d, plus 1, appears in the augmented spectrum.
  std::vector<std::complex<double>> want(ed.data(), ed.data() + ed.size());
  want.emplace_back(1.0, 0.0);
  for (const auto & w : want) {
    double best = 1e300;
    for (Eigen::Index k = 0; k < ea.size(); ++k) best = std::min(best, std::abs(ea(k) - w));
    EXPECT_LT(best, 1e-6);
  }
}

TEST(Prediction, OneStepBlocks)
{
  std::mt19937 rng(7);
  LinearizedModel lm = linearize_at(random_state(rng), 0.0, kP);
  discretize(lm, 0.05);
  const auto aug = augment(lm);
  const auto pm = build_prediction(aug, 1, 1);
  EXPECT_LT((pm.Psi - aug.C_tilde * aug.A_tilde).norm(), 1e-14);
  EXPECT_LT((pm.Theta - aug.C_tilde * aug.B_tilde).norm(), 1e-14);
}

TEST(Prediction, IdentityDynamicsRepeatBlock)
{
  AugmentedModel aug;
  aug.A_tilde.setIdentity();
  aug.B_tilde.setOnes();
  aug.C_tilde.setZero();
  aug.C_tilde(0, 2) = 1.0;
  aug.C_tilde(1, 4) = 2.0;
  aug.offset_tilde.setZero();
  const auto pm = build_prediction(aug, 6, 3);
  for (int i = 1; i <= 6; ++i)
    for (int j = 1; j <= 3; ++j) {
      const Eigen::Vector2d blk = pm.Theta.block<2, 1>(2 * (i - 1), j - 1);
      EXPECT_EQ(blk, j <= i ? Eigen::Vector2d(aug.C_tilde * aug.B_tilde) : Eigen::Vector2d::Zero());
    }
}

TEST(Prediction, MatchesStepSimulation)
{
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> np_dist(1, 75);
  std::normal_distribution<double> N(0.0, 0.01);
  for (int trial = 0; trial < 200; ++trial) {
    const int Np = np_dist(rng);
    const int Nc = std::uniform_int_distribution<int>(1, std::min(20, Np))(rng);
    LinearizedModel lm = linearize_at(random_state(rng), N(rng), kP);
    discretize(lm, 0.05);
    const auto aug = augment(lm);
    const auto pm = build_prediction(aug, Np, Nc);
    Eigen::VectorXd xt(8);
    xt << random_state(rng), N(rng);
    Eigen::VectorXd dU(Nc);
    for (int k = 0; k < Nc; ++k) dU(k) = N(rng);
    const Eigen::VectorXd got = pm.Psi * xt + pm.Theta * dU + offset_response(aug, Np);
    const Eigen::VectorXd want = oracle::simulate_outputs(
      aug.A_tilde, aug.B_tilde, aug.C_tilde, aug.offset_tilde, xt, dU, Np);
    const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
    ASSERT_LT((got - want).cwiseAbs().maxCoeff(), 1e-10 * scale) << "Np=" << Np << " Nc=" << Nc;
  }
}

TEST(Prediction, RejectsBadHorizons)
{
  AugmentedModel aug{};
  EXPECT_THROW(build_prediction(aug, 3, 4), std::invalid_argument);
  EXPECT_THROW(build_prediction(aug, 3, 0), std::invalid_argument);
}

namespace
{

MpcConfig unconstrained(int Np, int Nc)
{
  MpcConfig c;
  c.Np = Np;
  c.Nc = Nc;
  const double inf = std::numeric_limits<double>::infinity();
  c.u_min = -inf;
  c.u_max = inf;
  c.du_min = -inf;
  c.du_max = inf;
  return c;
}

}  // namespace

TEST(BuildQp, ZeroErrorGivesZeroStep)
{
  std::mt19937 rng(9);
  LinearizedModel lm = linearize_at(random_state(rng), 0.0, kP);
  discretize(lm, 0.05);
  const auto pm = build_prediction(augment(lm), 10, 4);
  Eigen::VectorXd xt = Eigen::VectorXd::Zero(8);
  xt(kIdxVx) = 10.0;
  const Eigen::VectorXd ref = pm.Psi * xt;
  const auto prob = build_qp(pm, xt, ref, MpcConfig{});
  const auto sol = solve_mpc_qp(prob);
  EXPECT_LT(sol.dU.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(std::abs(sol.eps), 1e-12);
}

TEST(BuildQp, OneStepClosedForm)
{
  // Scalar output: only Y is weighted.
  PredictionMatrices pm;
  pm.Np = 1;
  pm.Nc = 1;
  pm.Psi = Eigen::MatrixXd::Zero(2, 8);
  pm.Theta = Eigen::MatrixXd::Zero(2, 1);
  const double theta = 0.7;
  pm.Theta(1, 0) = theta;
  MpcConfig c = unconstrained(1, 1);
  c.Q_theta = 0.0;
  c.Q_y = 50.0;
  c.R_delta = 3.0;
  Eigen::VectorXd ref(2);
  ref << 0.0, 2.0;  // e = ref - prediction = 2
  const auto sol = solve_mpc_qp(build_qp(pm, Eigen::VectorXd::Zero(8), ref, c));
  const double e = 2.0;
  EXPECT_NEAR(sol.dU(0), theta * c.Q_y * e / (theta * theta * c.Q_y + c.R_delta), 1e-12);
}

TEST(BuildQp, HessianSymmetricPositiveDefinite)
{
  std::mt19937 rng(10);
  LinearizedModel lm = linearize_at(random_state(rng), 0.0, kP);
  discretize(lm, 0.05);
  const auto pm = build_prediction(augment(lm), 30, 10);
  const auto prob = build_qp(pm, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(60), MpcConfig{});
  EXPECT_LT((prob.qp.H - prob.qp.H.transpose()).norm(), 1e-12 * prob.qp.H.norm());
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(prob.qp.H).info(), Eigen::Success);
  EXPECT_DOUBLE_EQ(prob.qp.H(10, 10), 2.0 * MpcConfig{}.rho);
}

TEST(BuildQp, RejectsBadSizes)
{
  PredictionMatrices pm;
  pm.Np = 2;
  pm.Nc = 1;
  pm.Psi = Eigen::MatrixXd::Zero(4, 8);
  pm.Theta = Eigen::MatrixXd::Zero(4, 1);
  EXPECT_THROW(build_qp(pm, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(3), MpcConfig{}),
               std::invalid_argument);
}

TEST(QpSolver, UnconstrainedEqualsLinearSolve)
{
  std::mt19937 rng(12);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd M(6, 6);
  for (int i = 0; i < 36; ++i) M.data()[i] = N(rng);
  QpProblem qp;
  qp.H = M * M.transpose() + Eigen::MatrixXd::Identity(6, 6);
  qp.g = Eigen::VectorXd::NullaryExpr(6, [&]() { return N(rng); });
  qp.A_eq.resize(0, 6);
  qp.A_in.resize(0, 6);
  const auto r = solve_qp(qp, Eigen::VectorXd::Zero(6));
  ASSERT_EQ(r.status, QpStatus::kSolved);
  const Eigen::VectorXd z = qp.H.ldlt().solve(-qp.g);
  EXPECT_LT((r.z - z).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(QpSolver, SingleActiveBoundProjection)
{
  // min 1/2|z - c|^2 s.t. z0 <= 1 with c = (3, -2): solution (1, -2), w = 2.
  QpProblem qp;
  qp.H = Eigen::Matrix2d::Identity();
  qp.g = -Eigen::Vector2d(3.0, -2.0);
  qp.A_eq.resize(0, 2);
  qp.A_in = Eigen::RowVector2d(1.0, 0.0);
  qp.b_in = Eigen::VectorXd::Ones(1);
  const auto r = solve_qp(qp, Eigen::Vector2d::Zero());
  ASSERT_EQ(r.status, QpStatus::kSolved);
  EXPECT_NEAR(r.z(0), 1.0, 1e-12);
  EXPECT_NEAR(r.z(1), -2.0, 1e-12);
  EXPECT_NEAR(r.w_in(0), 2.0, 1e-12);
  EXPECT_EQ(r.active_set, std::vector<Eigen::Index>{0});
}

TEST(QpSolver, RandomProblemsMatchEnumerationOracle)
{
  std::mt19937 rng(13);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> B(0.1, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 5, m = 8;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n * n; ++i) M.data()[i] = N(rng);
    QpProblem qp;
    qp.H = M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    qp.g = 3.0 * Eigen::VectorXd::NullaryExpr(n, [&]() { return N(rng); });
    qp.A_eq.resize(0, n);
    qp.A_in = Eigen::MatrixXd::NullaryExpr(m, n, [&]() { return N(rng); });
    qp.b_in = Eigen::VectorXd::NullaryExpr(m, [&]() { return B(rng); });
    const auto r = solve_qp(qp, Eigen::VectorXd::Zero(n));
    ASSERT_EQ(r.status, QpStatus::kSolved);
    const double want = oracle::enumerate_qp(qp.H, qp.g, qp.A_in, qp.b_in);
    EXPECT_NEAR(r.objective, want, 1e-6 * std::max(1.0, std::abs(want)));
    EXPECT_LT(r.kkt.stationarity, 1e-8);
    EXPECT_LT(r.kkt.feasibility, 1e-9);
    EXPECT_LT(r.kkt.complementarity, 1e-8);
    EXPECT_LE(r.kkt.dual_feasibility, 0.0);
  }
}

TEST(QpSolver, InfeasibleStartReported)
{
  QpProblem qp;
  qp.H = Eigen::MatrixXd::Identity(1, 1);
  qp.g = Eigen::VectorXd::Zero(1);
  qp.A_eq.resize(0, 1);
  qp.A_in = Eigen::MatrixXd::Ones(1, 1);
  qp.b_in = -Eigen::VectorXd::Ones(1);
  EXPECT_EQ(solve_qp(qp, Eigen::VectorXd::Zero(1)).status, QpStatus::kInfeasibleStart);
}

namespace
{

std::vector<ReferencePoint> straight(int Np, double Y)
{
  return std::vector<ReferencePoint>(static_cast<std::size_t>(Np), ReferencePoint{0.0, Y});
}

}  // namespace

TEST(MpcStep, OnPathHoldsCommand)
{
  const MpcConfig c;
  const auto out = mpc_step(PlantState::at_speed(15.0), 0.0, straight(c.Np, 0.0), c, kP);
  EXPECT_NEAR(out.command, 0.0, 1e-12);
}

TEST(MpcStep, SteersTowardPath)
{
  const MpcConfig c;
  PlantState s = PlantState::at_speed(15.0);
  s.Y = 0.5;  // vehicle left of a reference at Y = 0
  EXPECT_LT(mpc_step(s, 0.0, straight(c.Np, 0.0), c, kP).command, 0.0);
  s.Y = -0.5;
  EXPECT_GT(mpc_step(s, 0.0, straight(c.Np, 0.0), c, kP).command, 0.0);
}

TEST(MpcStep, IncrementBoundedPerStep)
{
  const MpcConfig c;
  PlantState s = PlantState::at_speed(15.0);
  double u = 0.0;
  for (int k = 0; k < 40; ++k) {
    const double next = mpc_step(s, u, straight(c.Np, 3.0), c, kP).command;
    EXPECT_LE(std::abs(next - u), c.du_max + 1e-12);
    u = next;
    s = integrate_step(s, {u, {}}, RoadCondition{}, kP, 0.01);
  }
}

TEST(MpcStep, LargerRdeltaGivesSmallerFirstMove)
{
  MpcConfig c = unconstrained(20, 5);
  PlantState s = PlantState::at_speed(15.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double R : {10.0, 100.0, 1000.0, 10000.0}) {
    c.R_delta = R;
    const double u = std::abs(mpc_step(s, 0.0, straight(c.Np, 1.0), c, kP).command);
    EXPECT_LT(u, prev);
    prev = u;
  }
}

TEST(MpcStep, WindowLengthChecked)
{
  const MpcConfig c;
  EXPECT_THROW(mpc_step(PlantState::at_speed(10.0), 0.0, straight(c.Np - 1, 0.0), c, kP),
               std::invalid_argument);
}

TEST(MpcStep, EulerStepNonExpansiveAtSpeedFloor)
{
  const MpcConfig c;
  LinearizedModel lm = linearize_at(to_prediction_state(PlantState::at_speed(c.v_min_prediction)), 0.0, kP);
  discretize(lm, c.T);
  EXPECT_LT(lm.A_d.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-9);
}

TEST(MpcStep, SolvesAtWalkingPace)
{
  const MpcConfig c;
  PlantState s = PlantState::at_speed(1.39);
  s.Y = 0.3;
  const auto out = mpc_step(s, 0.0, straight(c.Np, 0.0), c, kP);
  EXPECT_EQ(out.solution.status, MpcStatus::kSolved);
  EXPECT_LT(out.solution.kkt.stationarity / out.solution.stationarity_scale, 1e-8);
  EXPECT_LT(out.solution.kkt.feasibility, 1e-9);
  EXPECT_LT(out.command, 0.0);
}
