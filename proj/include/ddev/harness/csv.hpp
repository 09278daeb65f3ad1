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

#ifndef DDEV_HARNESS_CSV_HPP_
#define DDEV_HARNESS_CSV_HPP_

// Simulation log CSV, schema version 1.
//
//   # ddev-simlog v1 name=<name> controller=<controller> status=<completed|aborted>
//   t,X,Y,...                      (column names, see simlog_columns())
//   0,0,0,...                      (one row per control step, %.17g)
//
// The first line is a comment so generic CSV tools can skip it.

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "ddev/harness/config_io.hpp"
#include "ddev/harness/scenario.hpp"

namespace ddev::harness
{

inline constexpr int kSimLogVersion = 1;

namespace detail
{

template <class Rec, class Visitor>
void visit_record(Rec & r, Visitor && v)
{
  v("t", r.t);
  v("X", r.X);
  v("Y", r.Y);
  v("phi", r.phi);
  v("vx", r.vx);
  v("vy", r.vy);
  v("beta", r.beta);
  v("phi_dot", r.phi_dot);
  v("phi_dot_ref", r.phi_dot_ref);
  v("delta_f", r.delta_f);
  v("Mz", r.Mz);
  v("T_fl", r.torque[0]);
  v("T_fr", r.torque[1]);
  v("T_rl", r.torque[2]);
  v("T_rr", r.torque[3]);
  v("dY", r.dY);
  v("yaw_rate_err", r.yaw_rate_err);
  v("dyc_active", r.dyc_active);
  v("Np", r.Np);
  v("Q_y", r.Q_y);
  v("R_delta", r.R_delta);
  v("qp_iterations", r.qp_iterations);
  v("qp_stationarity", r.qp_stationarity);
  v("qp_feasibility", r.qp_feasibility);
  v("qp_complementarity", r.qp_complementarity);
  v("qp_eps", r.qp_eps);
  v("qp_status", r.qp_status);
  v("alloc_status", r.alloc_status);
  v("alloc_eq_residual", r.alloc_eq_residual);
  v("care_residual", r.care_residual);
}

// The header line is space-delimited, so names must not contain blanks.
inline std::string header_token(std::string s)
{
  for (char & ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch))) ch = '_';
  }
  return s.empty() ? "unnamed" : s;
}

inline std::string status_string(RunStatus s)
{
  return s == RunStatus::kCompleted ? "completed" : "aborted";
}

}  // namespace detail

inline std::vector<std::string> simlog_columns()
{
  std::vector<std::string> cols;
  SimRecord r;
  detail::visit_record(r, [&](const char * name, auto &) { cols.emplace_back(name); });
  return cols;
}

inline void write_simlog(std::ostream & os, const SimLog & log)
{
  os << "# ddev-simlog v" << kSimLogVersion << " name=" << detail::header_token(log.name)
     << " controller=" << to_string(log.controller)
     << " status=" << detail::status_string(log.status) << '\n';
  const auto cols = simlog_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const SimRecord & rec : log.records) {
    bool first = true;
    detail::visit_record(rec, [&](const char *, const auto & field) {
      if (!first) os << ',';
      first = false;
      if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) {
        os << field;
      } else {
        os << format_double(field);
      }
    });
    os << '\n';
  }
}

inline void save_simlog(const std::string & file, const SimLog & log)
{
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write log: " + file);
  write_simlog(out, log);
  if (!out) throw std::runtime_error("write failed: " + file);
}

inline SimLog read_simlog(std::istream & is, const std::string & source = "<stream>")
{
  SimLog log;
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ddev-simlog v", 0) != 0) {
    throw std::runtime_error(source + ": missing simlog header line");
  }
  {
    std::istringstream meta(line.substr(2));
    std::string token;
    meta >> token;  // ddev-simlog
    meta >> token;
    if (token != "v" + std::to_string(kSimLogVersion)) {
      throw std::runtime_error(source + ": unsupported simlog version " + token);
    }
    while (meta >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
      if (key == "name") log.name = value;
      else if (key == "controller") log.controller = controller_from_string(value);
      else if (key == "status") log.status = value == "completed" ? RunStatus::kCompleted : RunStatus::kAborted;
    }
  }
  if (!std::getline(is, line)) throw std::runtime_error(source + ": missing column header");
  const auto cols = simlog_columns();
  {
    std::string expected;
    for (std::size_t i = 0; i < cols.size(); ++i) expected += (i ? "," : "") + cols[i];
    if (line != expected) throw std::runtime_error(source + ": column header mismatch");
  }
  std::size_t row = 2;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream cells(line);
    SimRecord rec;
    std::string cell;
    detail::visit_record(rec, [&](const char * name, auto & field) {
      if (!std::getline(cells, cell, ',')) {
        throw std::runtime_error(source + ": row " + std::to_string(row) + " is missing " + name);
      }
      const std::string where = source + ":" + std::to_string(row) + ":" + name;
      if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) {
        field = detail::parse_int(cell, where);
      } else {
        field = detail::parse_double(cell, where);
      }
    });
    if (std::getline(cells, cell, ',')) {
      throw std::runtime_error(source + ": row " + std::to_string(row) + " has extra cells");
    }
    log.records.push_back(rec);
  }
  return log;
}

inline SimLog load_simlog(const std::string & file)
{
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open log: " + file);
  return read_simlog(in, file);
}

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_CSV_HPP_
