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
#ifndef DDEV_ADAPTIVE_SCHEDULER_HPP_
#define DDEV_ADAPTIVE_SCHEDULER_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ddev
{

struct ScheduleAnchor
{
  double speed_kmh = 0.0;
  double Np = 0.0;
  double Q_y = 0.0;
  double R_delta = 0.0;
};

struct ScheduledParams
{
  int Np = 0;
  double Q_y = 0.0;
  double R_delta = 0.0;

  friend bool operator==(const ScheduledParams &, const ScheduledParams &) = default;
};

/// Speed-indexed lookup of (Np, Q_y, R_delta).
///
/// Between anchors Np and R_delta are interpolated linearly and Q_y on a log
/// scale. Below the first anchor the first anchor is held; above the last the
/// final segment is extrapolated linearly. Np is rounded after interpolation
/// and the clamps are applied last. Speeds at or below the freeze band are
/// evaluated at the band edge.
struct ScheduleTable
{
  std::vector<ScheduleAnchor> anchors{
    {18.0, 16.0, 2400.0, 860.0},
    {60.0, 45.0, 4.0, 2500.0},
    {62.0, 48.0, 4.0, 2700.0},
    {72.0, 63.0, 3.8, 3700.0},
  };
  int Np_max = 75;
  int Np_min = 1;
  double Q_y_min = 2.0;
  double freeze_kmh = 5.0;
  double max_kmh = 120.0;

  void validate() const
  {
    if (anchors.empty()) throw std::invalid_argument("ScheduleTable: no anchors");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const auto & a = anchors[i];
      if (!(a.Np >= 1.0 && a.Q_y > 0.0 && a.R_delta >= 0.0)) {
        throw std::invalid_argument("ScheduleTable: anchor values out of range");
      }
      if (i > 0 && !(a.speed_kmh > anchors[i - 1].speed_kmh)) {
        throw std::invalid_argument("ScheduleTable: anchor speeds must increase");
      }
    }
  }

  ScheduledParams lookup_kmh(double speed_kmh) const
  {
    const double v = std::clamp(speed_kmh, freeze_kmh, max_kmh);
    double np = 0.0;
    double qy = 0.0;
    double rd = 0.0;
    if (anchors.size() == 1 || v <= anchors.front().speed_kmh) {
      np = anchors.front().Np;
      qy = anchors.front().Q_y;
      rd = anchors.front().R_delta;
    } else if (v >= anchors.back().speed_kmh) {
      const auto & lo = anchors[anchors.size() - 2];
      const auto & hi = anchors.back();
      const double t = (v - lo.speed_kmh) / (hi.speed_kmh - lo.speed_kmh);
      np = lo.Np + t * (hi.Np - lo.Np);
      qy = lo.Q_y + t * (hi.Q_y - lo.Q_y);
      rd = lo.R_delta + t * (hi.R_delta - lo.R_delta);
    } else {
      std::size_t k = 1;
      while (anchors[k].speed_kmh < v) ++k;
      const auto & lo = anchors[k - 1];
      const auto & hi = anchors[k];
      const double t = (v - lo.speed_kmh) / (hi.speed_kmh - lo.speed_kmh);
      np = lo.Np + t * (hi.Np - lo.Np);
      qy = std::exp(std::log(lo.Q_y) + t * (std::log(hi.Q_y) - std::log(lo.Q_y)));
      rd = lo.R_delta + t * (hi.R_delta - lo.R_delta);
      if (t == 0.0) qy = lo.Q_y;
      if (t == 1.0) qy = hi.Q_y;
    }
    ScheduledParams out;
    out.Np = std::clamp(static_cast<int>(std::lround(np)), Np_min, Np_max);
    out.Q_y = std::max(qy, Q_y_min);
    out.R_delta = rd;
    return out;
  }
};

inline double mps_to_kmh(double v) { return v * 3.6; }
inline double kmh_to_mps(double v) { return v / 3.6; }

inline ScheduledParams schedule_params(double vx_mps, const ScheduleTable & table = {})
{
  return table.lookup_kmh(mps_to_kmh(vx_mps));
}

}  // namespace ddev

#endif  // DDEV_ADAPTIVE_SCHEDULER_HPP_
