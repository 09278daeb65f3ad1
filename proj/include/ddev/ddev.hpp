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

#ifndef DDEV_DDEV_HPP_
#define DDEV_DDEV_HPP_

#include "ddev/adaptive_scheduler.hpp"
#include "ddev/dyc.hpp"
#include "ddev/errors.hpp"
#include "ddev/harness/config_io.hpp"
#include "ddev/harness/csv.hpp"
#include "ddev/harness/envelope_fit.hpp"
#include "ddev/harness/metrics.hpp"
#include "ddev/harness/path_reference.hpp"
#include "ddev/harness/scenario.hpp"
#include "ddev/harness/speed_control.hpp"
#include "ddev/harness/sweep.hpp"
#include "ddev/ltv_mpc.hpp"
#include "ddev/qp_solver.hpp"
#include "ddev/torque_allocation.hpp"
#include "ddev/vehicle_plant.hpp"

#endif  // DDEV_DDEV_HPP_
