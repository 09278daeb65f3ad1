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

// Command-line driver: run, sweep, compare, fit-envelope, print-schedule.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddev/ddev.hpp"

namespace fs = std::filesystem;
using namespace ddev;
using namespace ddev::harness;

namespace
{

struct Common
{
  std::string out_dir = ".";
  std::string controller;
};

ScenarioConfig load_with_overrides(const std::string & file, const Common & common)
{
  ScenarioConfig cfg = load_config(file);
  if (!common.controller.empty()) cfg.controller = controller_from_string(common.controller);
  return cfg;
}

std::string log_stem(const ScenarioConfig & cfg)
{
  std::string tag = to_string(cfg.controller);
  std::replace(tag.begin(), tag.end(), '+', '_');
  return cfg.name + "_" + tag;
}

fs::path output_path(const Common & common, const std::string & file)
{
  fs::create_directories(common.out_dir);
  return fs::path(common.out_dir) / file;
}

std::string opt_text(const std::optional<double> & v)
{
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

void print_metrics(const Metrics & m)
{
  std::printf(
    "%-32s samples=%zu  X=[%.2f, %.2f]  lateral_rms=%.6g  yaw_rate_rms=%.6g  "
    "yaw_rate_err_rms=%.6g  beta_rms=%.6g\n",
    m.label.c_str(), m.samples, m.X_start, m.X_end, m.lateral_rms, m.yaw_rate_rms,
    m.yaw_rate_err_rms, m.beta_rms);
}

int cmd_run(const std::string & config_file, const Common & common)
{
  const ScenarioConfig cfg = load_with_overrides(config_file, common);
  const SimLog log = run_scenario(cfg);
  const fs::path out = output_path(common, log_stem(cfg) + ".csv");
  save_simlog(out.string(), log);
  if (log.records.empty()) {
    std::cerr << "run produced no records: " << log.diagnostic << '\n';
    return 2;
  }
  print_metrics(compute_metrics(log));
  std::printf("log written to %s\n", out.string().c_str());
  if (log.status != RunStatus::kCompleted) {
    std::cerr << "run aborted: " << log.diagnostic << '\n';
    return 2;
  }
  return 0;
}

std::vector<double> parse_values(const std::string & text)
{
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    values.push_back(harness::detail::parse_double(item, "sweep values"));
  }
  if (values.empty()) throw std::invalid_argument("no sweep values given");
  return values;
}

int cmd_sweep(
  const std::string & param, const std::string & values_text, const std::string & config_file,
  const Common & common)
{
  const ScenarioConfig base = load_with_overrides(config_file, common);
  const SweepParameter p = sweep_parameter_from_string(param);
  const auto values = parse_values(values_text);
  const auto family = sweep(p, values, base);

  const fs::path out = output_path(common, log_stem(base) + "_sweep_" + to_string(p) + ".csv");
  {
    std::ofstream os(out);
    write_sweep_csv(os, p, family);
  }
  // Step descriptors assume a step from the initial Y to a straight target.
  const double y0 = base.initial.Y;
  const double y1 = base.path.kind == PathKind::kStraight ? base.path.Y0 : y0;
  const double level = y0 + 0.9 * (y1 - y0);
  std::printf("%-10s %-12s %-14s %-14s %-14s %s\n", to_string(p).c_str(), "lateral_rms",
              "cross90_X[m]", "peak|r|[1/s]", "rise[m/s]", "status");
  int rc = 0;
  for (const SweepMember & m : family) {
    if (!m.error.empty() || m.log.records.empty()) {
      std::printf("%-10g %s\n", m.value, ("error: " + m.error + m.log.diagnostic).c_str());
      rc = 2;
      continue;
    }
    const Metrics met = compute_metrics(m.log);
    const auto cross = y1 != y0 ? first_crossing_station(m.log, level) : std::nullopt;
    const auto rise = y1 != y0 ? rise_rate(m.log, y0, y1) : std::nullopt;
    std::printf("%-10g %-12.6g %-14s %-14.6g %-14s %s\n", m.value, met.lateral_rms,
                opt_text(cross).c_str(), peak_abs_yaw_rate(m.log), opt_text(rise).c_str(),
                m.ok() ? "ok" : m.log.diagnostic.c_str());
    if (!m.ok()) rc = 2;
  }
  std::printf("sweep written to %s\n", out.string().c_str());
  return rc;
}

int cmd_compare(const std::vector<std::string> & files, const Common & common, double station_tol)
{
  std::vector<Metrics> metrics;
  for (const auto & f : files) {
    const SimLog log = load_simlog(f);
    if (log.records.empty()) throw std::runtime_error(f + ": log has no records");
    metrics.push_back(compute_metrics(log, fs::path(f).stem().string()));
  }
  for (const auto & m : metrics) print_metrics(m);
  if (metrics.size() < 2) return 0;
  const auto rows = compare_runs(metrics, station_tol);

  std::printf("\nDelta RMS (%%), positive = A better than B\n");
  std::printf("%-28s %-28s %10s %10s %12s %10s\n", "A", "B", "lateral", "yaw_rate",
              "yaw_rate_err", "beta");
  for (const auto & r : rows) {
    std::printf("%-28s %-28s %10.2f %10.2f %12.2f %10.2f\n", r.a.c_str(), r.b.c_str(), r.lateral,
                r.yaw_rate, r.yaw_rate_err, r.beta);
  }
  const fs::path out = output_path(common, "comparison.csv");
  std::ofstream os(out);
  os << "A,B,lateral_pct,yaw_rate_pct,yaw_rate_err_pct,beta_pct\n";
  for (const auto & r : rows) {
    os << r.a << ',' << r.b << ',' << format_double(r.lateral) << ',' << format_double(r.yaw_rate)
       << ',' << format_double(r.yaw_rate_err) << ',' << format_double(r.beta) << '\n';
  }
  std::printf("comparison written to %s\n", out.string().c_str());
  return 0;
}

int cmd_fit_envelope(const std::string & config_file, const Common & common, double speed_kmh)
{
  const ScenarioConfig cfg = load_with_overrides(config_file, common);
  EnvelopeFitOptions o;
  o.mu = cfg.road.mu;
  o.vx = (speed_kmh > 0.0 ? speed_kmh : std::max(cfg.speed.v0_kmh, cfg.speed.v1_kmh)) / 3.6;
  const EnvelopeFit fit = fit_envelope(cfg.vehicle, o);
  std::printf("# fitted at vx = %.4g km/h, mu = %.4g from %zu boundary points, "
              "max line deviation %.3f\n",
              o.vx * 3.6, o.mu, fit.boundary.size(), fit.max_deviation);
  std::printf("[dyc]\nB1 = %s\nB2 = %s\n", format_double(fit.B1).c_str(),
              format_double(fit.B2).c_str());
  return 0;
}

int cmd_print_schedule(const std::string & config_file, double step_kmh)
{
  ScheduleTable table;
  if (!config_file.empty()) table = load_config(config_file).schedule;
  if (!(step_kmh > 0.0)) throw std::invalid_argument("step must be > 0");
  std::printf("%8s %4s %12s %12s\n", "v[km/h]", "Np", "Q_y", "R_delta");
  const int n = static_cast<int>(std::floor(table.max_kmh / step_kmh + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double v = i * step_kmh;
    const ScheduledParams sp = schedule_params(kmh_to_mps(v), table);
    std::printf("%8.2f %4d %12.6g %12.6g\n", v, sp.Np, sp.Q_y, sp.R_delta);
  }
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Path tracking and yaw stability simulation for a four-wheel-drive EV"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  long seed_value = 0;
  app.add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed_value, "Reserved; the simulation is deterministic");
  app.add_option("--controller", common.controller,
                 "Controller override: LTV_MPC, AMPC, LTV_MPC+DYC, AMPC+DYC");

  std::string config_file;
  auto * run = app.add_subcommand("run", "Run one scenario and write its CSV log");
  run->add_option("config", config_file, "Scenario INI file")->required()->check(CLI::ExistingFile);

  std::string param, values;
  auto * sw = app.add_subcommand("sweep", "Vary one MPC parameter over a list of values");
  sw->add_option("param", param, "Np, Q_y or R_delta")->required();
  sw->add_option("values", values, "Comma-separated values")->required();
  sw->add_option("config", config_file, "Base scenario INI file")->required()->check(CLI::ExistingFile);

  std::vector<std::string> logs;
  double station_tol = 2.0;
  auto * cmp = app.add_subcommand("compare", "RMS metrics and pairwise percentage changes");
  cmp->add_option("logs", logs, "Simulation CSV logs; the first is the baseline")
    ->required()
    ->check(CLI::ExistingFile);
  cmp->add_option("--station-tol", station_tol, "Allowed start/end station mismatch, m")
    ->capture_default_str();

  double fit_speed = -1.0;
  auto * fit = app.add_subcommand("fit-envelope", "Fit the phase-plane coefficients B1, B2");
  fit->add_option("config", config_file, "Scenario INI (vehicle, mu, speed)")
    ->required()
    ->check(CLI::ExistingFile);
  fit->add_option("--speed", fit_speed, "Fit speed in km/h (default: highest profile speed)");

  double step_kmh = 5.0;
  auto * ps = app.add_subcommand("print-schedule", "Tabulate the speed schedule");
  ps->add_option("--config", config_file, "Take the schedule from this INI file")
    ->check(CLI::ExistingFile);
  ps->add_option("--step", step_kmh, "Speed step, km/h")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_file, common);
    if (*sw) return cmd_sweep(param, values, config_file, common);
    if (*cmp) return cmd_compare(logs, common, station_tol);
    if (*fit) return cmd_fit_envelope(config_file, common, fit_speed);
    if (*ps) return cmd_print_schedule(config_file, step_kmh);
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
