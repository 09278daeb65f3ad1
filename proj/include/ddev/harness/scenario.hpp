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
#ifndef DDEV_HARNESS_SCENARIO_HPP_
#define DDEV_HARNESS_SCENARIO_HPP_

// Closed-loop orchestration: plant + (A)MPC steering + optional DYC + torque
// allocation, sampled at the controller period with zero-order hold.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddev/adaptive_scheduler.hpp"
#include "ddev/dyc.hpp"
#include "ddev/harness/path_reference.hpp"
#include "ddev/harness/speed_control.hpp"
#include "ddev/ltv_mpc.hpp"
#include "ddev/torque_allocation.hpp"
#include "ddev/vehicle_plant.hpp"

namespace ddev::harness
{

enum class ControllerKind { kLtvMpc, kAmpc, kLtvMpcDyc, kAmpcDyc };

inline std::string to_string(ControllerKind k)
{
  switch (k) {
    case ControllerKind::kLtvMpc: return "LTV_MPC";
    case ControllerKind::kAmpc: return "AMPC";
    case ControllerKind::kLtvMpcDyc: return "LTV_MPC+DYC";
    case ControllerKind::kAmpcDyc: return "AMPC+DYC";
  }
  return "?";
}

inline ControllerKind controller_from_string(const std::string & s)
{
  if (s == "LTV_MPC" || s == "ltv_mpc") return ControllerKind::kLtvMpc;
  if (s == "AMPC" || s == "ampc") return ControllerKind::kAmpc;
  if (s == "LTV_MPC+DYC" || s == "ltv_mpc+dyc" || s == "LTV_MPC_DYC") return ControllerKind::kLtvMpcDyc;
  if (s == "AMPC+DYC" || s == "ampc+dyc" || s == "AMPC_DYC") return ControllerKind::kAmpcDyc;
  throw std::invalid_argument("unknown controller: " + s);
}

inline bool uses_schedule(ControllerKind k)
{
  return k == ControllerKind::kAmpc || k == ControllerKind::kAmpcDyc;
}

inline bool uses_dyc(ControllerKind k)
{
  return k == ControllerKind::kLtvMpcDyc || k == ControllerKind::kAmpcDyc;
}

struct InitialCondition
{
  double X = 0.0;
  double Y = 0.0;
  double phi = 0.0;
  // Negative: start at the speed profile's target at X.
  double vx_kmh = -1.0;
};

struct ScenarioConfig
{
  std::string name = "scenario";
  PathReference path;
  SpeedProfile speed;
  RoadCondition road;
  ControllerKind controller = ControllerKind::kAmpc;
  VehicleParams vehicle;
  MpcConfig mpc;  // fixed parameters for the LTV variants; T, Nc, bounds for all
  ScheduleTable schedule;
  DycConfig dyc;
  SpeedControllerGains speed_gains;
  SlipRatios slip;
  InitialCondition initial;
  double dt = 0.001;        // plant step, s
  double duration = 60.0;   // s
  double stop_station = std::numeric_limits<double>::infinity();  // m
  std::string output = "";

  void validate() const
  {
    vehicle.validate();
    road.validate();
    mpc.validate();
    schedule.validate();
    dyc.validate();
    speed.validate();
    if (!(dt > 0.0 && dt <= 0.01)) throw std::invalid_argument("ScenarioConfig: dt must lie in (0, 0.01]");
    const double ratio = mpc.T / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
      throw std::invalid_argument("ScenarioConfig: controller period must be a multiple of dt");
    }
    if (!(duration > 0.0)) throw std::invalid_argument("ScenarioConfig: duration must be > 0");
  }
};

struct SimRecord
{
  double t = 0.0;
  double X = 0.0;
  double Y = 0.0;
  double phi = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double beta = 0.0;
  double phi_dot = 0.0;
  double phi_dot_ref = 0.0;
  double delta_f = 0.0;
  double Mz = 0.0;
  PerWheel<double> torque{0.0, 0.0, 0.0, 0.0};
  double dY = 0.0;            // Y - Y_ref(X)
  double yaw_rate_err = 0.0;  // phi_dot - phi_dot_ref
  int dyc_active = 0;
  int Np = 0;
  double Q_y = 0.0;
  double R_delta = 0.0;
  int qp_iterations = 0;
  double qp_stationarity = 0.0;  // scaled, see QpSolution::stationarity_scale
  double qp_feasibility = 0.0;
  double qp_complementarity = 0.0;
  double qp_eps = 0.0;
  int qp_status = 0;             // 0 solved, 1 infeasible fallback
  int alloc_status = 0;          // 0 exact, 1 scaled
  double alloc_eq_residual = 0.0;
  double care_residual = 0.0;    // relative, 0 when DYC is off
};

enum class RunStatus { kCompleted, kAborted };

struct SimLog
{
  std::string name;
  ControllerKind controller = ControllerKind::kAmpc;
  std::vector<SimRecord> records;
  RunStatus status = RunStatus::kCompleted;
  std::string diagnostic;
};

inline std::vector<ReferencePoint> reference_window(
  const PathReference & path, const PlantState & s, double T, int Np)
{
  std::vector<ReferencePoint> w(static_cast<std::size_t>(Np));
  for (int i = 1; i <= Np; ++i) {
    const PathSample ps = path.at(s.X + i * s.vx * T);
    w[static_cast<std::size_t>(i - 1)] = {ps.theta, ps.Y};
  }
  return w;
}

inline SimLog run_scenario(const ScenarioConfig & cfg)
{
  cfg.validate();
  SimLog log;
  log.name = cfg.name;
  log.controller = cfg.controller;

  const VehicleParams & vp = cfg.vehicle;
  const int substeps = static_cast<int>(std::lround(cfg.mpc.T / cfg.dt));
  const long max_steps = static_cast<long>(std::floor(cfg.duration / cfg.mpc.T + 1e-9));
  log.records.reserve(static_cast<std::size_t>(std::min(max_steps, 100000L)));

  PlantState state;
  state.X = cfg.initial.X;
  state.Y = cfg.initial.Y;
  state.phi = cfg.initial.phi;
  state.vx = cfg.initial.vx_kmh >= 0.0 ? cfg.initial.vx_kmh / 3.6 : cfg.speed.target_mps(state.X);
  state.sync_beta();

  SpeedControllerGains sg = cfg.speed_gains;
  sg.mass = vp.m;
  sg.force_limit = 4.0 * vp.Tmax / vp.r;
  SpeedController speed_ctrl(sg);
  std::optional<YawMomentController> dyc;
  if (uses_dyc(cfg.controller)) dyc.emplace(cfg.dyc, vp);

  PlantInputs applied;
  double u_prev = 0.0;
  double ax = 0.0;
  double ay = 0.0;

  try {
    for (long k = 0; k < max_steps; ++k) {
      if (state.X >= cfg.stop_station) break;
      SimRecord rec;
      rec.t = static_cast<double>(k) * cfg.mpc.T;

      MpcConfig mc = cfg.mpc;
      if (uses_schedule(cfg.controller)) {
        const ScheduledParams sp = schedule_params(state.vx, cfg.schedule);
        mc.Np = sp.Np;
        mc.Q_y = sp.Q_y;
        mc.R_delta = sp.R_delta;
      }
      mc.Nc = std::min(mc.Nc, mc.Np);

      const auto window = reference_window(cfg.path, state, mc.T, mc.Np);
      const MpcStepResult mpc = mpc_step(state, u_prev, window, mc, vp, cfg.slip);
      const double delta = mpc.command;

      const PlantEvaluation ev = evaluate_plant(state, applied, cfg.road, vp);
      ax = ev.ax;
      ay = ev.ay;

      double mz = 0.0;
      if (dyc) {
        const auto out = dyc->step(state, delta, ev.derivative.beta, cfg.road.mu);
        mz = out.command.Mz;
        rec.dyc_active = out.command.active ? 1 : 0;
        rec.phi_dot_ref = out.reference.phi_dot_ref;
        rec.care_residual = out.care_relative_residual;
      } else {
        rec.phi_dot_ref = reference_yaw_rate(state.vx, delta, cfg.road.mu, vp).phi_dot_ref;
      }

      const double fx_total = speed_ctrl.update(cfg.speed.target_mps(state.X), state.vx, mc.T);
      AllocationProblem ap;
      ap.Fx_total = fx_total;
      ap.Mz = mz;
      ap.Fz = vertical_loads(ax, ay, vp);
      ap.mu = cfg.road.mu;
      ap.r = vp.r;
      ap.d = vp.d;
      ap.Tmax = vp.Tmax;
      const WheelTorques wt = allocate(ap);

      rec.X = state.X;
      rec.Y = state.Y;
      rec.phi = state.phi;
      rec.vx = state.vx;
      rec.vy = state.vy;
      rec.beta = state.beta;
      rec.phi_dot = state.phi_dot;
      rec.delta_f = delta;
      rec.Mz = mz;
      rec.torque = wt.T;
      rec.dY = state.Y - cfg.path.at(state.X).Y;
      rec.yaw_rate_err = state.phi_dot - rec.phi_dot_ref;
      rec.Np = mc.Np;
      rec.Q_y = mc.Q_y;
      rec.R_delta = mc.R_delta;
      rec.qp_iterations = mpc.solution.iterations;
      rec.qp_stationarity = mpc.solution.kkt.stationarity / mpc.solution.stationarity_scale;
      rec.qp_feasibility = mpc.solution.kkt.feasibility;
      rec.qp_complementarity = mpc.solution.kkt.complementarity;
      rec.qp_eps = mpc.solution.eps;
      rec.qp_status = mpc.solution.status == MpcStatus::kSolved ? 0 : 1;
      rec.alloc_status = wt.status == AllocationStatus::kExact ? 0 : 1;
      rec.alloc_eq_residual = wt.equality_residual;
      log.records.push_back(rec);

      applied.delta_f = delta;
      applied.wheel_torques = wt.T;
      u_prev = delta;
      for (int j = 0; j < substeps; ++j) {
        state = integrate_step(state, applied, cfg.road, vp, cfg.dt);
      }
    }
  } catch (const DegenerateSpeedError & e) {
    log.status = RunStatus::kAborted;
    log.diagnostic = std::string("degenerate speed: ") + e.what();
  } catch (const RolloverError & e) {
    log.status = RunStatus::kAborted;
    log.diagnostic = std::string("rollover: ") + e.what();
  } catch (const RiccatiError & e) {
    log.status = RunStatus::kAborted;
    log.diagnostic = std::string("riccati: ") + e.what();
  }
  return log;
}

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_SCENARIO_HPP_
