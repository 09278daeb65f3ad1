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
#ifndef DDEV_QP_SOLVER_HPP_
#define DDEV_QP_SOLVER_HPP_

// Dense primal active-set solver for small strictly convex QPs:
//
//   minimize    1/2 z' H z + g' z
//   subject to  A_eq z  = b_eq
//               A_in z <= b_in
//
// The caller supplies a feasible starting point. Each iteration solves the
// equality-constrained subproblem on the working set through an upper
// triangular factor U of H = U'U and the Schur complement W H^-1 W'. Callers
// with an ill-conditioned H can pass U computed by QR of a least-squares
// stack; otherwise U comes from a Cholesky factorization of H. Pivoting is
// deterministic: the blocking constraint with the shortest step enters and
// the most negative multiplier leaves, ties going to the lowest index.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ddev
{

struct QpProblem
{
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd H_factor;  // optional upper triangular U with H = U'U
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  Eigen::Index num_vars() const { return g.size(); }

  double objective(const Eigen::VectorXd & z) const { return 0.5 * z.dot(H * z) + g.dot(z); }
};

enum class QpStatus { kSolved, kInfeasibleStart, kIterationLimit, kNumericalFailure };

inline const char * to_string(QpStatus s)
{
  switch (s) {
    case QpStatus::kSolved: return "solved";
    case QpStatus::kInfeasibleStart: return "infeasible_start";
    case QpStatus::kIterationLimit: return "iteration_limit";
    case QpStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct KktResiduals
{
  double stationarity = 0.0;    // ||H z + g + A_eq' y + A_in' w||_inf
  double feasibility = 0.0;     // max equality / inequality violation
  double complementarity = 0.0; // max |w_i (a_i' z - b_i)|
  double dual_feasibility = 0.0;// max(0, -min w_i)
};

struct QpResult
{
  Eigen::VectorXd z;
  Eigen::VectorXd y_eq;   // equality multipliers
  Eigen::VectorXd w_in;   // inequality multipliers, >= 0 at optimum
  std::vector<Eigen::Index> active_set;  // active inequality rows, ascending
  double objective = 0.0;
  int iterations = 0;
  QpStatus status = QpStatus::kSolved;
  KktResiduals kkt;
};

struct QpSettings
{
  int max_iterations = 500;
  double feasibility_tol = 1e-9;
  double multiplier_tol = 1e-12;
};

inline KktResiduals kkt_residuals(
  const QpProblem & qp, const Eigen::VectorXd & z, const Eigen::VectorXd & y,
  const Eigen::VectorXd & w)
{
  KktResiduals r;
  Eigen::VectorXd grad = qp.H * z + qp.g;
  if (qp.A_eq.rows() > 0) {
    grad += qp.A_eq.transpose() * y;
    r.feasibility = (qp.A_eq * z - qp.b_eq).cwiseAbs().maxCoeff();
  }
  if (qp.A_in.rows() > 0) {
    grad += qp.A_in.transpose() * w;
    const Eigen::VectorXd slack = qp.A_in * z - qp.b_in;
    r.feasibility = std::max(r.feasibility, std::max(0.0, slack.maxCoeff()));
    r.complementarity = w.cwiseProduct(slack).cwiseAbs().maxCoeff();
    r.dual_feasibility = std::max(0.0, -w.minCoeff());
  }
  r.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

namespace detail
{

/// Solves H p + c + W' nu = 0, W p = rhs for the working-set rows W, with
/// H = U'U. Returns false when the Schur complement is not positive definite.
inline bool solve_working_set(
  const Eigen::MatrixXd & U, const Eigen::MatrixXd & W, const Eigen::VectorXd & c,
  const Eigen::VectorXd & rhs, Eigen::VectorXd & p, Eigen::VectorXd & nu)
{
  const auto upper = U.triangularView<Eigen::Upper>();
  const Eigen::VectorXd hc = upper.solve(upper.transpose().solve(c));
  if (W.rows() == 0) {
    p = -hc;
    nu.resize(0);
    return true;
  }
  const Eigen::MatrixXd V = upper.transpose().solve(W.transpose());
  const Eigen::MatrixXd hw = upper.solve(V);
  const Eigen::MatrixXd schur = V.transpose() * V;
  Eigen::LLT<Eigen::MatrixXd> s_llt(schur);
  if (s_llt.info() != Eigen::Success) {
    return false;
  }
  // W p = -W H^-1 (c + W' nu) = rhs
  nu = s_llt.solve(-(W * hc) - rhs);
  p = -hc - hw * nu;
  return true;
}

}  // namespace detail

/// Solves the QP from a feasible start z0.
inline QpResult solve_qp(const QpProblem & qp, const Eigen::VectorXd & z0, const QpSettings & settings = {})
{
  const Eigen::Index n = qp.num_vars();
  const Eigen::Index n_eq = qp.A_eq.rows();
  const Eigen::Index n_in = qp.A_in.rows();

  QpResult res;
  res.z = z0;
  res.y_eq = Eigen::VectorXd::Zero(n_eq);
  res.w_in = Eigen::VectorXd::Zero(n_in);

  // Start must be feasible.
  {
    double viol = 0.0;
    if (n_eq > 0) viol = (qp.A_eq * z0 - qp.b_eq).cwiseAbs().maxCoeff();
    if (n_in > 0) viol = std::max(viol, (qp.A_in * z0 - qp.b_in).maxCoeff());
    if (viol > settings.feasibility_tol) {
      res.status = QpStatus::kInfeasibleStart;
      res.objective = qp.objective(z0);
      res.kkt = kkt_residuals(qp, res.z, res.y_eq, res.w_in);
      return res;
    }
  }

  Eigen::MatrixXd U = qp.H_factor;
  if (U.size() == 0) {
    Eigen::LLT<Eigen::MatrixXd> h_llt(qp.H);
    if (h_llt.info() != Eigen::Success) {
      res.status = QpStatus::kNumericalFailure;
      return res;
    }
    U = h_llt.matrixU();
  }

  std::vector<Eigen::Index> working;  // inequality rows, kept ascending
  auto assemble = [&](Eigen::MatrixXd & W, Eigen::VectorXd & bw) {
    const Eigen::Index k = n_eq + static_cast<Eigen::Index>(working.size());
    W.resize(k, n);
    bw.resize(k);
    if (n_eq > 0) {
      W.topRows(n_eq) = qp.A_eq;
      bw.head(n_eq) = qp.b_eq;
    }
    for (std::size_t i = 0; i < working.size(); ++i) {
      W.row(n_eq + static_cast<Eigen::Index>(i)) = qp.A_in.row(working[i]);
      bw(n_eq + static_cast<Eigen::Index>(i)) = qp.b_in(working[i]);
    }
  };

  Eigen::MatrixXd W;
  Eigen::VectorXd bw;
  Eigen::VectorXd p;
  Eigen::VectorXd nu;
  bool converged = false;
  bool at_subproblem_minimum = false;  // previous step was a full, unblocked step
  int it = 0;
  for (; it < settings.max_iterations; ++it) {
    assemble(W, bw);
    const Eigen::VectorXd c = qp.H * res.z + qp.g;
    if (!detail::solve_working_set(U, W, c, Eigen::VectorXd::Zero(W.rows()), p, nu)) {
      res.status = QpStatus::kNumericalFailure;
      break;
    }
    const double p_scale = std::max(1.0, res.z.cwiseAbs().maxCoeff());
    if (at_subproblem_minimum || p.cwiseAbs().maxCoeff() <= 1e-11 * p_scale) {
      at_subproblem_minimum = false;
      // Stationary on the working set: check inequality multipliers.
      Eigen::Index drop = -1;
      double most_negative = -settings.multiplier_tol;
      for (std::size_t i = 0; i < working.size(); ++i) {
        const double w = nu(n_eq + static_cast<Eigen::Index>(i));
        if (w < most_negative) {
          most_negative = w;
          drop = static_cast<Eigen::Index>(i);
        }
      }
      if (drop < 0) {
        converged = true;
        break;
      }
      working.erase(working.begin() + drop);
      continue;
    }

    // Ratio test over inequalities outside the working set. A row in the span
    // of the working set is constant along p; rounding must not let it block,
    // since adding it would make the working set rank deficient.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> span;
    if (W.rows() > 0) span.compute(W.transpose());
    const auto in_span = [&](Eigen::Index i) {
      if (W.rows() == 0) return false;
      const Eigen::VectorXd a = qp.A_in.row(i).transpose();
      const Eigen::VectorXd resid = a - W.transpose() * span.solve(a);
      return resid.norm() <= 1e-9 * a.norm();
    };
    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < n_in; ++i) {
      if (std::binary_search(working.begin(), working.end(), i)) continue;
      const double ap = qp.A_in.row(i).dot(p);
      if (ap <= 1e-14 * qp.A_in.row(i).cwiseAbs().maxCoeff() * p.cwiseAbs().maxCoeff()) continue;
      if (in_span(i)) continue;
      const double room = std::max(0.0, qp.b_in(i) - qp.A_in.row(i).dot(res.z));
      const double ratio = room / ap;
      if (ratio < step) {
        step = ratio;
        blocking = i;
      }
    }
    res.z += step * p;
    at_subproblem_minimum = blocking < 0;
    if (blocking >= 0) {
      working.insert(std::upper_bound(working.begin(), working.end(), blocking), blocking);
    }
  }
  res.iterations = it;

  if (res.status == QpStatus::kSolved && !converged) {
    res.status = QpStatus::kIterationLimit;
  }

  if (converged) {
    // Polish: solve the working-set KKT system for z directly so active rows
    // hold to rounding, then refine once.
    assemble(W, bw);
    Eigen::VectorXd z = res.z;
    for (int refine = 0; refine < 2; ++refine) {
      const Eigen::VectorXd c = qp.H * z + qp.g;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(W.rows());
      if (W.rows() > 0) rhs = bw - W * z;
      Eigen::VectorXd dz;
      if (!detail::solve_working_set(U, W, c, rhs, dz, nu)) break;
      z += dz;
    }
    // Accept the polished point only if it stays feasible.
    double viol = 0.0;
    if (n_eq > 0) viol = (qp.A_eq * z - qp.b_eq).cwiseAbs().maxCoeff();
    if (n_in > 0) viol = std::max(viol, (qp.A_in * z - qp.b_in).maxCoeff());
    if (viol <= settings.feasibility_tol) {
      res.z = z;
    }
    res.y_eq = nu.head(n_eq);
    for (std::size_t i = 0; i < working.size(); ++i) {
      res.w_in(working[i]) = nu(n_eq + static_cast<Eigen::Index>(i));
    }
    res.active_set = working;
  }
  res.objective = qp.objective(res.z);
  res.kkt = kkt_residuals(qp, res.z, res.y_eq, res.w_in);
  return res;
}

}  // namespace ddev

#endif  // DDEV_QP_SOLVER_HPP_
