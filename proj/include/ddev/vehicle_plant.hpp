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
#ifndef DDEV_VEHICLE_PLANT_HPP_
#define DDEV_VEHICLE_PLANT_HPP_

// Nonlinear double-track vehicle plant and the tire-force primitives shared
// with the prediction model.
//
// Frames: global X/Y with yaw phi measured counter-clockwise from X; body x
// forward, y to the left. Wheel order is fl, fr, rl, rr everywhere. Left
// wheels sit at y = +d/2, so a larger drive force on the right side yields a
// positive (counter-clockwise) yaw moment.
//
// Cornering stiffnesses are per tire and stored negative; Fy = C * alpha with
// alpha = (wheel lateral velocity / wheel longitudinal velocity) - steer.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

#include "ddev/errors.hpp"

namespace ddev
{

struct VehicleParams
{
  double m = 1860.0;       // kg
  double Iz = 4175.0;      // kg m^2
  double a = 1.232;        // centroid to front axle, m
  double b = 1.468;        // centroid to rear axle, m
  double d = 1.6;          // track width, m
  double r = 0.3;          // wheel radius, m
  double Caf = -77223.0;   // front cornering stiffness per tire, N/rad
  double Car = -66782.0;   // rear cornering stiffness per tire, N/rad
  // Not given numerically by the source vehicle data; documented defaults.
  double Clf = 50000.0;    // front longitudinal stiffness, N per unit slip
  double Clr = 50000.0;    // rear longitudinal stiffness, N per unit slip
  double h_cg = 0.54;      // m
  double Tmax = 300.0;     // motor torque limit, N m
  double g = 9.81;         // m/s^2

  double wheelbase() const noexcept { return a + b; }

  void validate() const
  {
    auto positive = [](double v, const char * name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("VehicleParams.") + name + " must be > 0");
      }
    };
    positive(m, "m");
    positive(Iz, "Iz");
    positive(a, "a");
    positive(b, "b");
    positive(d, "d");
    positive(r, "r");
    positive(h_cg, "h_cg");
    positive(Tmax, "Tmax");
    positive(g, "g");
    if (!(Caf < 0.0) || !(Car < 0.0)) {
      throw std::invalid_argument("VehicleParams: cornering stiffnesses must be negative");
    }
  }
};

struct RoadCondition
{
  double mu = 0.6;

  void validate() const
  {
    if (!(mu > 0.0 && mu <= 1.2)) {
      throw std::invalid_argument("RoadCondition.mu must lie in (0, 1.2]");
    }
  }
};

/// Global pose plus body-frame velocities. beta is derived (vy / vx).
struct PlantState
{
  double X = 0.0;
  double Y = 0.0;
  double phi = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double phi_dot = 0.0;
  double beta = 0.0;

  static PlantState at_speed(double vx, double X = 0.0, double Y = 0.0, double phi = 0.0)
  {
    PlantState s;
    s.X = X;
    s.Y = Y;
    s.phi = phi;
    s.vx = vx;
    return s;
  }

  void sync_beta() noexcept { beta = vx != 0.0 ? vy / vx : 0.0; }

  friend bool operator==(const PlantState &, const PlantState &) = default;
};

enum Wheel : std::size_t { kFrontLeft = 0, kFrontRight = 1, kRearLeft = 2, kRearRight = 3 };

template <class T>
using PerWheel = std::array<T, 4>;

struct WheelForce
{
  double Fx = 0.0;     // wheel frame, N
  double Fy = 0.0;     // wheel frame, N
  double Fz = 0.0;     // N
  double alpha = 0.0;  // rad
};

using WheelForces = PerWheel<WheelForce>;

struct PlantInputs
{
  double delta_f = 0.0;
  PerWheel<double> wheel_torques{0.0, 0.0, 0.0, 0.0};
};

enum class TireModel { kBrush, kLinear };

/// Fidelity switches. The defaults are the simulation plant; kLinear with
/// small_angle reduces the plant to the single-track prediction model.
struct PlantOptions
{
  TireModel tire = TireModel::kBrush;
  bool small_angle = false;
  double min_slip_speed = 0.5;  // m/s, floor on slip-angle denominators
};

inline constexpr double kMinPlantSpeed = 0.1;

struct AxleSlipAngles
{
  double front = 0.0;
  double rear = 0.0;
};

inline void require_speed(double vx, double threshold, const char * where)
{
  if (!(vx > threshold)) {
    std::ostringstream os;
    os << where << ": longitudinal speed " << vx << " m/s is below " << threshold << " m/s";
    throw DegenerateSpeedError(os.str());
  }
}

/// Single-track slip angles.
inline AxleSlipAngles axle_slip_angles(
  double vx, double vy, double phi_dot, double delta_f, const VehicleParams & p)
{
  require_speed(vx, kMinPlantSpeed, "axle_slip_angles");
  return {(vy + p.a * phi_dot) / vx - delta_f, (vy - p.b * phi_dot) / vx};
}

/// Double-track slip angles; left wheels see vx - (d/2) phi_dot, right wheels
/// vx + (d/2) phi_dot.
inline PerWheel<double> wheel_slip_angles(
  const PlantState & s, double delta_f, const VehicleParams & p)
{
  require_speed(s.vx, kMinPlantSpeed, "wheel_slip_angles");
  const double half_track = 0.5 * p.d * s.phi_dot;
  const double v_left = s.vx - half_track;
  const double v_right = s.vx + half_track;
  require_speed(std::min(v_left, v_right), 0.0, "wheel_slip_angles");
  const double vy_front = s.vy + p.a * s.phi_dot;
  const double vy_rear = s.vy - p.b * s.phi_dot;
  return {
    vy_front / v_left - delta_f, vy_front / v_right - delta_f, vy_rear / v_left,
    vy_rear / v_right};
}

/// Brush tire lateral force. c_alpha_mag is the stiffness magnitude; the
/// result opposes alpha and saturates at mu * Fz.
inline double brush_lateral_force(double alpha, double c_alpha_mag, double mu, double Fz)
{
  const double mu_fz = mu * Fz;
  const double t = std::tan(alpha);
  if (std::abs(alpha) < std::atan(3.0 * mu_fz / c_alpha_mag)) {
    const double c = c_alpha_mag;
    return -c * t + c * c / (3.0 * mu_fz) * std::abs(t) * t -
           c * c * c / (27.0 * mu_fz * mu_fz) * t * t * t;
  }
  return alpha > 0.0 ? -mu_fz : (alpha < 0.0 ? mu_fz : 0.0);
}

inline double linear_lateral_force(double alpha, double c_alpha_signed)
{
  return c_alpha_signed * alpha;
}

/// Quasi-static wheel loads. Longitudinal transfer m*ax*h/L is split evenly
/// across each axle; lateral transfer m*ay*h/d is shared between the axles in
/// proportion to their static load. Loads always sum to m*g.
inline PerWheel<double> vertical_loads(double ax, double ay, const VehicleParams & p)
{
  const double L = p.wheelbase();
  const double front_static = p.m * p.g * p.b / (2.0 * L);
  const double rear_static = p.m * p.g * p.a / (2.0 * L);
  const double long_shift = p.m * ax * p.h_cg / (2.0 * L);
  const double lat_total = p.m * ay * p.h_cg / p.d;
  const double lat_front = lat_total * p.b / L;
  const double lat_rear = lat_total * p.a / L;
  // ay > 0 (turning left) loads the right-hand wheels.
  PerWheel<double> fz{
    front_static - long_shift - lat_front, front_static - long_shift + lat_front,
    rear_static + long_shift - lat_rear, rear_static + long_shift + lat_rear};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!(fz[i] > 0.0)) {
      std::ostringstream os;
      os << "wheel " << i << " vertical load " << fz[i] << " N (ax=" << ax << ", ay=" << ay
         << ")";
      throw RolloverError(os.str());
    }
  }
  return fz;
}

struct PlantEvaluation
{
  PlantState derivative;  // field-wise time derivative of PlantState
  WheelForces forces;
  double ax = 0.0;        // body-frame acceleration, m/s^2
  double ay = 0.0;
};

namespace detail
{

struct BodyForces
{
  double Fx = 0.0;
  double Fy = 0.0;
  double Mz = 0.0;
};

inline BodyForces tire_forces(
  const PlantState & s, const PlantInputs & in, const RoadCondition & road,
  const VehicleParams & p, const PlantOptions & opt, const PerWheel<double> & fz,
  WheelForces & out)
{
  PlantState slip_state = s;
  slip_state.vx = std::max(s.vx, opt.min_slip_speed);
  const double half_track = 0.5 * p.d * slip_state.phi_dot;
  // Keep each wheel's denominator above the floor as well.
  if (slip_state.vx - std::abs(half_track) < opt.min_slip_speed) {
    slip_state.vx = opt.min_slip_speed + std::abs(half_track);
  }
  const auto alpha = wheel_slip_angles(slip_state, in.delta_f, p);

  const double cos_d = opt.small_angle ? 1.0 : std::cos(in.delta_f);
  const double sin_d = opt.small_angle ? in.delta_f : std::sin(in.delta_f);
  const double half_d = 0.5 * p.d;
  const std::array<double, 4> pos_x{p.a, p.a, -p.b, -p.b};
  const std::array<double, 4> pos_y{half_d, -half_d, half_d, -half_d};

  BodyForces body;
  for (std::size_t i = 0; i < 4; ++i) {
    const bool front = i < 2;
    const double c_signed = front ? p.Caf : p.Car;
    double fx = in.wheel_torques[i] / p.r;
    double fy = 0.0;
    if (opt.tire == TireModel::kLinear) {
      fy = linear_lateral_force(alpha[i], c_signed);
    } else {
      // Friction circle: drive force first, lateral force uses what remains.
      const double limit = road.mu * fz[i];
      fx = std::clamp(fx, -limit, limit);
      const double remaining = std::sqrt(std::max(limit * limit - fx * fx, 0.0025 * limit * limit));
      fy = brush_lateral_force(alpha[i], std::abs(c_signed), remaining / fz[i], fz[i]);
    }
    out[i] = {fx, fy, fz[i], alpha[i]};

    double bx = fx;
    double by = fy;
    if (front) {
      bx = fx * cos_d - fy * sin_d;
      by = fx * sin_d + fy * cos_d;
    }
    body.Fx += bx;
    body.Fy += by;
    body.Mz += pos_x[i] * by - pos_y[i] * bx;
  }
  return body;
}

}  // namespace detail

/// Full evaluation of the plant vector field, including per-wheel forces.
inline PlantEvaluation evaluate_plant(
  const PlantState & s, const PlantInputs & in, const RoadCondition & road,
  const VehicleParams & p, const PlantOptions & opt = {})
{
  require_speed(s.vx, kMinPlantSpeed, "plant_derivative");

  PlantEvaluation ev;
  detail::BodyForces body;
  if (opt.tire == TireModel::kLinear) {
    const double L = p.wheelbase();
    const double front = p.m * p.g * p.b / (2.0 * L);
    const double rear = p.m * p.g * p.a / (2.0 * L);
    body = detail::tire_forces(s, in, road, p, opt, {front, front, rear, rear}, ev.forces);
  } else {
    // One fixed-point pass resolves the load/force coupling.
    const auto static_loads = vertical_loads(0.0, 0.0, p);
    const auto first = detail::tire_forces(s, in, road, p, opt, static_loads, ev.forces);
    const auto loads = vertical_loads(first.Fx / p.m, first.Fy / p.m, p);
    body = detail::tire_forces(s, in, road, p, opt, loads, ev.forces);
  }

  ev.ax = body.Fx / p.m;
  ev.ay = body.Fy / p.m;

  PlantState & ds = ev.derivative;
  const double c = std::cos(s.phi);
  const double sn = std::sin(s.phi);
  ds.X = s.vx * c - s.vy * sn;
  ds.Y = s.vx * sn + s.vy * c;
  ds.phi = s.phi_dot;
  ds.vx = s.vy * s.phi_dot + ev.ax;
  ds.vy = -s.vx * s.phi_dot + ev.ay;
  ds.phi_dot = body.Mz / p.Iz;
  ds.beta = (ds.vy * s.vx - s.vy * ds.vx) / (s.vx * s.vx);
  return ev;
}

inline PlantState plant_derivative(
  const PlantState & s, const PlantInputs & in, const RoadCondition & road,
  const VehicleParams & p, const PlantOptions & opt = {})
{
  return evaluate_plant(s, in, road, p, opt).derivative;
}

namespace detail
{

inline PlantState axpy(const PlantState & s, double h, const PlantState & k)
{
  PlantState o;
  o.X = s.X + h * k.X;
  o.Y = s.Y + h * k.Y;
  o.phi = s.phi + h * k.phi;
  o.vx = s.vx + h * k.vx;
  o.vy = s.vy + h * k.vy;
  o.phi_dot = s.phi_dot + h * k.phi_dot;
  o.beta = s.beta + h * k.beta;
  return o;
}

}  // namespace detail

/// Classical RK4 step with inputs held over the interval.
inline PlantState integrate_step(
  const PlantState & s, const PlantInputs & in, const RoadCondition & road,
  const VehicleParams & p, double dt, const PlantOptions & opt = {})
{
  if (!(dt > 0.0 && dt <= 0.01)) {
    throw std::invalid_argument("integrate_step: dt must lie in (0, 0.01]");
  }
  const PlantState k1 = plant_derivative(s, in, road, p, opt);
  const PlantState k2 = plant_derivative(detail::axpy(s, 0.5 * dt, k1), in, road, p, opt);
  const PlantState k3 = plant_derivative(detail::axpy(s, 0.5 * dt, k2), in, road, p, opt);
  const PlantState k4 = plant_derivative(detail::axpy(s, dt, k3), in, road, p, opt);

  PlantState out = s;
  auto rk = [dt](double x, double a, double b, double c, double d) {
    return x + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
  };
  out.X = rk(s.X, k1.X, k2.X, k3.X, k4.X);
  out.Y = rk(s.Y, k1.Y, k2.Y, k3.Y, k4.Y);
  out.phi = rk(s.phi, k1.phi, k2.phi, k3.phi, k4.phi);
  out.vx = rk(s.vx, k1.vx, k2.vx, k3.vx, k4.vx);
  out.vy = rk(s.vy, k1.vy, k2.vy, k3.vy, k4.vy);
  out.phi_dot = rk(s.phi_dot, k1.phi_dot, k2.phi_dot, k3.phi_dot, k4.phi_dot);
  out.sync_beta();
  return out;
}

}  // namespace ddev

#endif  // DDEV_VEHICLE_PLANT_HPP_
