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

#ifndef DDEV_HARNESS_CONFIG_IO_HPP_
#define DDEV_HARNESS_CONFIG_IO_HPP_

// INI serialization of ScenarioConfig. Every key is optional on load; missing
// keys keep their defaults, unknown keys are rejected. Doubles are written
// with 17 significant digits so save -> load is exact.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ddev/errors.hpp"
#include "ddev/harness/scenario.hpp"

namespace ddev::harness
{

namespace pt = boost::property_tree;

inline std::string format_double(double v)
{
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail
{

/// Visits every scalar field of the config as (section, key, field).
template <class Visitor>
void visit_fields(ScenarioConfig & c, Visitor && v)
{
  v("scenario", "dt", c.dt);
  v("scenario", "duration", c.duration);
  v("scenario", "stop_station", c.stop_station);

  v("path", "Y0", c.path.Y0);
  v("path", "dy1", c.path.dlc.dy1);
  v("path", "dy2", c.path.dlc.dy2);
  v("path", "dx1", c.path.dlc.dx1);
  v("path", "dx2", c.path.dlc.dx2);
  v("path", "x1", c.path.dlc.x1);
  v("path", "x2", c.path.dlc.x2);
  v("path", "shape", c.path.dlc.shape);
  v("path", "offset", c.path.dlc.offset);
  v("path", "x_min", c.path.x_min);
  v("path", "x_max", c.path.x_max);

  v("speed", "v0_kmh", c.speed.v0_kmh);
  v("speed", "v1_kmh", c.speed.v1_kmh);
  v("speed", "ramp_start", c.speed.ramp_start);
  v("speed", "ramp_end", c.speed.ramp_end);
  v("speed", "kp", c.speed_gains.kp);
  v("speed", "ki", c.speed_gains.ki);

  v("road", "mu", c.road.mu);

  v("initial", "X", c.initial.X);
  v("initial", "Y", c.initial.Y);
  v("initial", "phi", c.initial.phi);
  v("initial", "vx_kmh", c.initial.vx_kmh);

  v("vehicle", "m", c.vehicle.m);
  v("vehicle", "Iz", c.vehicle.Iz);
  v("vehicle", "a", c.vehicle.a);
  v("vehicle", "b", c.vehicle.b);
  v("vehicle", "d", c.vehicle.d);
  v("vehicle", "r", c.vehicle.r);
  v("vehicle", "Caf", c.vehicle.Caf);
  v("vehicle", "Car", c.vehicle.Car);
  v("vehicle", "Clf", c.vehicle.Clf);
  v("vehicle", "Clr", c.vehicle.Clr);
  v("vehicle", "h_cg", c.vehicle.h_cg);
  v("vehicle", "Tmax", c.vehicle.Tmax);
  v("vehicle", "g", c.vehicle.g);

  v("mpc", "Np", c.mpc.Np);
  v("mpc", "Nc", c.mpc.Nc);
  v("mpc", "T", c.mpc.T);
  v("mpc", "Q_theta", c.mpc.Q_theta);
  v("mpc", "Q_y", c.mpc.Q_y);
  v("mpc", "R_delta", c.mpc.R_delta);
  v("mpc", "rho", c.mpc.rho);
  v("mpc", "u_min", c.mpc.u_min);
  v("mpc", "u_max", c.mpc.u_max);
  v("mpc", "du_min", c.mpc.du_min);
  v("mpc", "du_max", c.mpc.du_max);
  v("mpc", "v_min_prediction", c.mpc.v_min_prediction);
  v("mpc", "slip_front", c.slip.front);
  v("mpc", "slip_rear", c.slip.rear);

  v("schedule", "Np_max", c.schedule.Np_max);
  v("schedule", "Np_min", c.schedule.Np_min);
  v("schedule", "Q_y_min", c.schedule.Q_y_min);
  v("schedule", "freeze_kmh", c.schedule.freeze_kmh);
  v("schedule", "max_kmh", c.schedule.max_kmh);

  v("dyc", "yaw_err_threshold", c.dyc.envelope.yaw_err_threshold);
  v("dyc", "B1", c.dyc.envelope.B1);
  v("dyc", "B2", c.dyc.envelope.B2);
  v("dyc", "hysteresis_off_factor", c.dyc.envelope.hysteresis_off_factor);
  v("dyc", "q_beta", c.dyc.weights.q_beta);
  v("dyc", "q_phi_dot", c.dyc.weights.q_phi_dot);
  v("dyc", "r", c.dyc.weights.r);
  v("dyc", "Mz_max", c.dyc.Mz_max);
  v("dyc", "gain_speed_step", c.dyc.gain_speed_step);
  v("dyc", "delta_eps", c.dyc.delta_eps);
}

inline std::string anchor_key(std::size_t i) { return "anchor_" + std::to_string(i); }

inline double parse_double(const std::string & text, const std::string & where)
{
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception &) {
    throw ConfigError(where + ": not a number: '" + text + "'");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size()) throw ConfigError(where + ": trailing characters in '" + text + "'");
  return v;
}

inline int parse_int(const std::string & text, const std::string & where)
{
  const double v = parse_double(text, where);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(where + ": not an integer");
  return static_cast<int>(v);
}

inline ScheduleAnchor parse_anchor(const std::string & text, const std::string & where)
{
  std::string s = text;
  for (char & ch : s) {
    if (ch == ',') ch = ' ';
  }
  std::istringstream is(s);
  std::string f[4];
  std::string extra;
  if (!(is >> f[0] >> f[1] >> f[2] >> f[3]) || (is >> extra)) {
    throw ConfigError(where + ": expected 'speed_kmh, Np, Q_y, R_delta'");
  }
  return {parse_double(f[0], where), parse_double(f[1], where), parse_double(f[2], where),
          parse_double(f[3], where)};
}

}  // namespace detail

inline pt::ptree to_ptree(const ScenarioConfig & cfg)
{
  ScenarioConfig c = cfg;
  pt::ptree tree;
  tree.put("scenario.name", c.name);
  tree.put("scenario.controller", to_string(c.controller));
  tree.put("scenario.output", c.output);
  tree.put("path.kind", to_string(c.path.kind));
  tree.put("speed.kind", c.speed.kind == SpeedProfileKind::kConstant ? "constant" : "ramp");
  detail::visit_fields(c, [&](const char * sec, const char * key, auto & field) {
    const std::string path = std::string(sec) + "." + key;
    if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) {
      tree.put(path, std::to_string(field));
    } else {
      tree.put(path, format_double(field));
    }
  });
  for (std::size_t i = 0; i < c.schedule.anchors.size(); ++i) {
    const ScheduleAnchor & a = c.schedule.anchors[i];
    tree.put("schedule." + detail::anchor_key(i),
             format_double(a.speed_kmh) + ", " + format_double(a.Np) + ", " +
               format_double(a.Q_y) + ", " + format_double(a.R_delta));
  }
  return tree;
}

inline ScenarioConfig from_ptree(const pt::ptree & tree)
{
  ScenarioConfig c;
  std::set<std::string> known{"scenario.name", "scenario.controller", "scenario.output",
                              "path.kind", "speed.kind"};
  const auto text = [&](const std::string & path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
    return std::nullopt;
  };

  if (auto v = text("scenario.name")) c.name = *v;
  if (auto v = text("scenario.output")) c.output = *v;
  try {
    if (auto v = text("scenario.controller")) c.controller = controller_from_string(*v);
    if (auto v = text("path.kind")) c.path.kind = path_kind_from_string(*v);
  } catch (const std::invalid_argument & e) {
    throw ConfigError(e.what());
  }
  if (auto v = text("speed.kind")) {
    if (*v == "constant") c.speed.kind = SpeedProfileKind::kConstant;
    else if (*v == "ramp") c.speed.kind = SpeedProfileKind::kRamp;
    else throw ConfigError("speed.kind: expected 'constant' or 'ramp', got '" + *v + "'");
  }

  detail::visit_fields(c, [&](const char * sec, const char * key, auto & field) {
    const std::string path = std::string(sec) + "." + key;
    known.insert(path);
    const auto v = text(path);
    if (!v) return;
    if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) {
      field = detail::parse_int(*v, path);
    } else {
      field = detail::parse_double(*v, path);
    }
  });

  std::vector<ScheduleAnchor> anchors;
  for (std::size_t i = 0;; ++i) {
    const std::string path = "schedule." + detail::anchor_key(i);
    const auto v = text(path);
    if (!v) break;
    known.insert(path);
    anchors.push_back(detail::parse_anchor(*v, path));
  }
  if (!anchors.empty()) c.schedule.anchors = std::move(anchors);

  for (const auto & [section, body] : tree) {
    if (body.empty()) throw ConfigError("key outside any section: " + section);
    for (const auto & [key, value] : body) {
      const std::string path = section + "." + key;
      if (!known.count(path)) throw ConfigError("unknown config key: " + path);
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument & e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

inline ScenarioConfig parse_config(std::istream & is)
{
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error & e) {
    throw ConfigError(e.what());
  }
  return from_ptree(tree);
}

inline ScenarioConfig load_config(const std::string & file)
{
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config: " + file);
  return parse_config(in);
}

inline void write_config(std::ostream & os, const ScenarioConfig & cfg)
{
  pt::write_ini(os, to_ptree(cfg));
}

inline void save_config(const std::string & file, const ScenarioConfig & cfg)
{
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write config: " + file);
  write_config(out, cfg);
}

}  // namespace ddev::harness

#endif  // DDEV_HARNESS_CONFIG_IO_HPP_
