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

#ifndef DDEV_HARNESS_SWEEP_HPP_
#define DDEV_HARNESS_SWEEP_HPP_

#include <cmath>
#include <future>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "ddev/harness/csv.hpp"
#include "ddev/harness/scenario.hpp"

namespace ddev::harness
{

enum class SweepParameter { kNp, kQy, kRdelta };

inline SweepParameter sweep_parameter_from_string(const std::string & s)
{
  if (s == "Np") return SweepParameter::kNp;
  if (s == "Q_y" || s == "Qy") return SweepParameter::kQy;
  if (s == "R_delta" || s == "R") return SweepParameter::kRdelta;
  throw std::invalid_argument("unknown sweep parameter: " + s + " (expected Np, Q_y or R_delta)");
}

inline std::string to_string(SweepParameter p)
{
  switch (p) {
    case SweepParameter::kNp: return "Np";
    case SweepParameter::kQy: return "Q_y";
    case SweepParameter::kRdelta: return "R_delta";
  }
  return "?";
}

/// One member of a sweep family. A member whose config is rejected keeps an
/// empty log and the error text; a member whose run aborts keeps the partial log.
struct SweepMember
{
  double value = 0.0;
  SimLog log;
  std::string error;

  bool ok() const { return error.empty() && log.status == RunStatus::kCompleted; }
};

inline ScenarioConfig with_parameter(ScenarioConfig cfg, SweepParameter p, double value)
{
  if (!std::isfinite(value)) throw std::invalid_argument("sweep value must be finite");
  switch (p) {
    case SweepParameter::kNp:
      if (value != std::floor(value)) throw std::invalid_argument("Np must be an integer");
      cfg.mpc.Np = static_cast<int>(value);
      break;
    case SweepParameter::kQy: cfg.mpc.Q_y = value; break;
    case SweepParameter::kRdelta: cfg.mpc.R_delta = value; break;
  }
  cfg.name += "_" + to_string(p) + "=" + format_double(value);
  return cfg;
}

/// Runs are independent, so they execute concurrently; results keep the
/// order of `values`. The swept parameter is only meaningful for the fixed
/// (non-scheduled) controllers, where it is used verbatim.
inline std::vector<SweepMember> sweep(
  SweepParameter p, const std::vector<double> & values, const ScenarioConfig & base,
  bool parallel = true)
{
  std::vector<std::future<SweepMember>> jobs;
  jobs.reserve(values.size());
  for (double v : values) {
    const auto task = [p, v, base]() {
      SweepMember m;
      m.value = v;
      try {
        m.log = run_scenario(with_parameter(base, p, v));
      } catch (const std::exception & e) {
        m.error = e.what();
      }
      return m;
    };
    jobs.push_back(std::async(parallel ? std::launch::async : std::launch::deferred, task));
  }
  std::vector<SweepMember> out;
  out.reserve(values.size());
  for (auto & j : jobs) out.push_back(j.get());
  return out;
}

/// Long-format CSV: parameter and value columns prepended to each log row.
inline void write_sweep_csv(std::ostream & os, SweepParameter p, const std::vector<SweepMember> & fam)
{
  os << "# ddev-sweep v" << kSimLogVersion << " parameter=" << to_string(p) << '\n';
  os << "parameter,value";
  for (const auto & c : simlog_columns()) os << ',' << c;
  os << '\n';
  for (const SweepMember & m : fam) {
    for (const SimRecord & rec : m.log.records) {
      os << to_string(p) << ',' << format_double(m.value);
      detail::visit_record(rec, [&](const char *, const auto & field) {
        os << ',';
        if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) {
          os << field;
        } else {
          os << format_double(field);
        }
      });
      os << '\n';
    }
  }
}

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_SWEEP_HPP_
