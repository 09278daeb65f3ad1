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

#ifndef DDEV_HARNESS_METRICS_HPP_
#define DDEV_HARNESS_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddev/harness/scenario.hpp"

namespace ddev::harness
{

/// RMS summary of one run over all logged control steps.
struct Metrics
{
  std::string label;
  std::size_t samples = 0;
  double lateral_rms = 0.0;         // m
  double yaw_rate_rms = 0.0;        // rad/s
  double yaw_rate_err_rms = 0.0;    // rad/s
  double beta_rms = 0.0;            // rad
  double X_start = 0.0;             // m
  double X_end = 0.0;               // m
};

class ComparisonError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline Metrics compute_metrics(const SimLog & log, const std::string & label = "")
{
  if (log.records.empty()) throw std::invalid_argument("compute_metrics: empty log");
  Metrics m;
  m.label = label.empty() ? log.name + ":" + to_string(log.controller) : label;
  m.samples = log.records.size();
  double sy = 0.0, sr = 0.0, se = 0.0, sb = 0.0;
  for (const SimRecord & r : log.records) {
    sy += r.dY * r.dY;
    sr += r.phi_dot * r.phi_dot;
    se += r.yaw_rate_err * r.yaw_rate_err;
    sb += r.beta * r.beta;
  }
  const double n = static_cast<double>(m.samples);
  m.lateral_rms = std::sqrt(sy / n);
  m.yaw_rate_rms = std::sqrt(sr / n);
  m.yaw_rate_err_rms = std::sqrt(se / n);
  m.beta_rms = std::sqrt(sb / n);
  m.X_start = log.records.front().X;
  m.X_end = log.records.back().X;
  return m;
}

/// Percentage change of A relative to B; positive means A has the smaller RMS.
inline double delta_rms_percent(double rms_a, double rms_b)
{
  if (rms_b == 0.0) {
    if (rms_a == 0.0) return 0.0;
    throw ComparisonError("delta_rms_percent: baseline RMS is zero");
  }
  return (rms_b - rms_a) / rms_b * 100.0;
}

struct ComparisonRow
{
  std::string a;
  std::string b;
  double lateral = 0.0;
  double yaw_rate = 0.0;
  double yaw_rate_err = 0.0;
  double beta = 0.0;
};

/// Station ranges must agree to station_tol (one controller period of travel
/// is the natural scale); otherwise the RMS values describe different roads.
inline void check_station_ranges(const Metrics & a, const Metrics & b, double station_tol)
{
  if (std::abs(a.X_start - b.X_start) > station_tol || std::abs(a.X_end - b.X_end) > station_tol) {
    std::ostringstream os;
    os << "station ranges differ: [" << a.X_start << ", " << a.X_end << "] vs [" << b.X_start
       << ", " << b.X_end << "]";
    throw ComparisonError(os.str());
  }
}

inline ComparisonRow compare_pair(const Metrics & a, const Metrics & b, double station_tol = 2.0)
{
  check_station_ranges(a, b, station_tol);
  ComparisonRow row;
  row.a = a.label;
  row.b = b.label;
  row.lateral = delta_rms_percent(a.lateral_rms, b.lateral_rms);
  row.yaw_rate = delta_rms_percent(a.yaw_rate_rms, b.yaw_rate_rms);
  row.yaw_rate_err = delta_rms_percent(a.yaw_rate_err_rms, b.yaw_rate_err_rms);
  row.beta = delta_rms_percent(a.beta_rms, b.beta_rms);
  return row;
}

/// Every later run against every earlier one, so the first entry acts as the
/// common baseline. Rows with a zero-RMS baseline channel report NaN there.
inline std::vector<ComparisonRow> compare_runs(
  const std::vector<Metrics> & runs, double station_tol = 2.0)
{
  std::vector<ComparisonRow> rows;
  const auto safe = [](double a, double b) {
    try {
      return delta_rms_percent(a, b);
    } catch (const ComparisonError &) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  for (std::size_t j = 1; j < runs.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const Metrics & a = runs[j];
      const Metrics & b = runs[i];
      check_station_ranges(a, b, station_tol);
      ComparisonRow row;
      row.a = a.label;
      row.b = b.label;
      row.lateral = safe(a.lateral_rms, b.lateral_rms);
      row.yaw_rate = safe(a.yaw_rate_rms, b.yaw_rate_rms);
      row.yaw_rate_err = safe(a.yaw_rate_err_rms, b.yaw_rate_err_rms);
      row.beta = safe(a.beta_rms, b.beta_rms);
      rows.push_back(row);
    }
  }
  return rows;
}

// Step-response descriptors used by the parameter sweeps.

/// Station of the first upward crossing of Y = level, linearly interpolated.
inline std::optional<double> first_crossing_station(const SimLog & log, double level)
{
  const auto & r = log.records;
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (r[k - 1].Y < level && r[k].Y >= level) {
      const double w = (level - r[k - 1].Y) / (r[k].Y - r[k - 1].Y);
      return r[k - 1].X + w * (r[k].X - r[k - 1].X);
    }
  }
  return std::nullopt;
}

inline double peak_abs_yaw_rate(const SimLog & log)
{
  double peak = 0.0;
  for (const SimRecord & r : log.records) peak = std::max(peak, std::abs(r.phi_dot));
  return peak;
}

/// Mean lateral speed between the 10% and 90% points of a step from y0 to y1,
/// in m/s. Empty when the response never reaches 90%.
inline std::optional<double> rise_rate(const SimLog & log, double y0, double y1)
{
  const double span = y1 - y0;
  const auto time_at = [&](double frac) -> std::optional<double> {
    const double level = y0 + frac * span;
    const auto & r = log.records;
    for (std::size_t k = 1; k < r.size(); ++k) {
      const double e0 = (r[k - 1].Y - level) * span;
      const double e1 = (r[k].Y - level) * span;
      if (e0 < 0.0 && e1 >= 0.0) {
        const double w = e0 / (e0 - e1);
        return r[k - 1].t + w * (r[k].t - r[k - 1].t);
      }
    }
    return std::nullopt;
  };
  const auto t10 = time_at(0.1);
  const auto t90 = time_at(0.9);
  if (!t10 || !t90 || !(*t90 > *t10)) return std::nullopt;
  return 0.8 * std::abs(span) / (*t90 - *t10);
}

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_METRICS_HPP_
