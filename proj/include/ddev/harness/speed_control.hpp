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
#ifndef DDEV_HARNESS_SPEED_CONTROL_HPP_
#define DDEV_HARNESS_SPEED_CONTROL_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ddev::harness
{

enum class SpeedProfileKind { kConstant, kRamp };

/// Target speed as a function of station X. Speeds in km/h.
struct SpeedProfile
{
  SpeedProfileKind kind = SpeedProfileKind::kConstant;
  double v0_kmh = 30.0;
  double v1_kmh = 30.0;
  double ramp_start = 0.0;  // m
  double ramp_end = 60.0;   // m

  void validate() const
  {
    if (!(v0_kmh >= 0.0 && v0_kmh <= 120.0 && v1_kmh >= 0.0 && v1_kmh <= 120.0)) {
      throw std::invalid_argument("SpeedProfile: speeds must lie in [0, 120] km/h");
    }
    if (kind == SpeedProfileKind::kRamp && !(ramp_end > ramp_start)) {
      throw std::invalid_argument("SpeedProfile: ramp_end must exceed ramp_start");
    }
  }

  double target_kmh(double X) const
  {
    if (kind == SpeedProfileKind::kConstant) return v0_kmh;
    const double t = std::clamp((X - ramp_start) / (ramp_end - ramp_start), 0.0, 1.0);
    return v0_kmh + t * (v1_kmh - v0_kmh);
  }

  double target_mps(double X) const { return target_kmh(X) / 3.6; }
};

struct SpeedControllerGains
{
  double kp = 1.5;   // 1/s, acceleration per unit speed error
  double ki = 0.3;   // 1/s^2
  double mass = 1860.0;
  double force_limit = 4000.0;  // N, normally 4 Tmax / r
};

/// PI speed loop producing a total longitudinal force. The integrator is
/// frozen whenever the output saturates in the direction of the error.
class SpeedController
{
public:
  explicit SpeedController(SpeedControllerGains g) : g_(g) {}

  double update(double v_target, double vx, double dt)
  {
    const double e = v_target - vx;
    const double unclamped = g_.mass * (g_.kp * e + g_.ki * (integral_ + e * dt));
    const bool saturated_same_way =
      (unclamped > g_.force_limit && e > 0.0) || (unclamped < -g_.force_limit && e < 0.0);
    if (!saturated_same_way) integral_ += e * dt;
    const double u = g_.mass * (g_.kp * e + g_.ki * integral_);
    return std::clamp(u, -g_.force_limit, g_.force_limit);
  }

  double integral() const noexcept { return integral_; }
  void reset() noexcept { integral_ = 0.0; }

private:
  SpeedControllerGains g_;
  double integral_ = 0.0;
};

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_SPEED_CONTROL_HPP_
