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

#ifndef DDEV_ERRORS_HPP_
#define DDEV_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ddev
{

/// Longitudinal speed too low for slip-angle or linearization formulas.
class DegenerateSpeedError : public std::runtime_error
{
public:
  explicit DegenerateSpeedError(const std::string & what) : std::runtime_error(what) {}
};

/// A wheel lost contact (vertical load <= 0).
class RolloverError : public std::runtime_error
{
public:
  explicit RolloverError(const std::string & what) : std::runtime_error(what) {}
};

/// Riccati solve failed (non-stabilizable pair or divergent iteration).
class RiccatiError : public std::runtime_error
{
public:
  RiccatiError(const std::string & what, double residual)
  : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

class ConfigError : public std::runtime_error
{
public:
  explicit ConfigError(const std::string & what) : std::runtime_error(what) {}
};

}  // namespace ddev

#endif  // DDEV_ERRORS_HPP_
