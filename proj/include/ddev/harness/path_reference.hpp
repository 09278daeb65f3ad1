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
#ifndef DDEV_HARNESS_PATH_REFERENCE_HPP_
#define DDEV_HARNESS_PATH_REFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ddev::harness
{

enum class PathKind { kStraight, kDoubleLaneChange };

inline std::string to_string(PathKind k)
{
  return k == PathKind::kStraight ? "straight" : "double_lane_change";
}

inline PathKind path_kind_from_string(const std::string & s)
{
  if (s == "straight") return PathKind::kStraight;
  if (s == "double_lane_change" || s == "dlc") return PathKind::kDoubleLaneChange;
  throw std::invalid_argument("unknown path kind: " + s);
}

/// Two tanh lane shifts:
///   Y(X) = dy1/2 (1 + tanh z1) - dy2/2 (1 + tanh z2)
///   zk   = shape / dxk (X - xk) - offset
struct DlcShape
{
  double dy1 = 4.05;
  double dy2 = 5.7;
  double dx1 = 25.0;
  double dx2 = 21.95;
  double x1 = 27.19;
  double x2 = 56.46;
  double shape = 2.4;
  double offset = 1.2;
};

struct PathSample
{
  double Y = 0.0;
  double theta = 0.0;  // atan(dY/dX)
};

struct PathReference
{
  PathKind kind = PathKind::kDoubleLaneChange;
  double Y0 = 0.0;  // straight line offset
  DlcShape dlc;
  double x_min = -100.0;
  double x_max = 1000.0;

  double slope(double X) const
  {
    if (kind == PathKind::kStraight) return 0.0;
    const auto sech2 = [](double z) {
      const double c = std::cosh(z);
      return 1.0 / (c * c);
    };
    const double k1 = dlc.shape / dlc.dx1;
    const double k2 = dlc.shape / dlc.dx2;
    const double z1 = k1 * (X - dlc.x1) - dlc.offset;
    const double z2 = k2 * (X - dlc.x2) - dlc.offset;
    return 0.5 * dlc.dy1 * k1 * sech2(z1) - 0.5 * dlc.dy2 * k2 * sech2(z2);
  }

  PathSample at(double X) const
  {
    const double x = std::clamp(X, x_min, x_max);
    if (kind == PathKind::kStraight) return {Y0, 0.0};
    const double z1 = dlc.shape / dlc.dx1 * (x - dlc.x1) - dlc.offset;
    const double z2 = dlc.shape / dlc.dx2 * (x - dlc.x2) - dlc.offset;
    PathSample s;
    s.Y = 0.5 * dlc.dy1 * (1.0 + std::tanh(z1)) - 0.5 * dlc.dy2 * (1.0 + std::tanh(z2));
    s.theta = std::atan(slope(x));
    return s;
  }
};

inline PathSample reference_at(const PathReference & path, double X) { return path.at(X); }

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_PATH_REFERENCE_HPP_
